#include "ntsdr/tuning.hpp"

#include "ntsdr/errors.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <utility>

namespace ntsdr {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kDenomGuard = 1e-12;

std::vector<double> canonical_grid(std::vector<double> g, const char* which) {
    if (g.empty()) throw InvalidArgument(std::string(which) + " grid is empty");
    for (double v : g)
        if (!(v > 0.0) || !std::isfinite(v))
            throw InvalidArgument(std::string(which) + " grid needs positive finite entries");
    std::sort(g.begin(), g.end());
    g.erase(std::unique(g.begin(), g.end()), g.end());
    return g;
}

// Candidate (u, v) pairs in descending regularization preference, so a scan
// that replaces the incumbent only on strict improvement resolves ties
// toward heavier smoothing.
std::vector<std::pair<double, double>> preference_ordered(
    std::vector<std::pair<double, double>> pairs) {
    std::sort(pairs.begin(), pairs.end(), [](const auto& a, const auto& b) {
        double pa = a.first * a.second, pb = b.first * b.second;
        if (pa != pb) return pa > pb;
        return a.first > b.first;
    });
    pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());
    return pairs;
}

std::vector<double> neighbor_values(const std::vector<double>& grid, double center) {
    auto it = std::find(grid.begin(), grid.end(), center);
    std::size_t i = it == grid.end() ? 0 : static_cast<std::size_t>(it - grid.begin());
    std::vector<double> out;
    if (i > 0) out.push_back(grid[i - 1]);
    out.push_back(grid[i]);
    if (i + 1 < grid.size()) out.push_back(grid[i + 1]);
    return out;
}

struct SearchOutcome {
    double u = 0.0, v = 0.0;
    double score = kInf;
    int evaluations = 0;
};

// Diagonal pass plus one 3x3 neighbor refinement; scores memoized so
// duplicated candidates cannot change the outcome.
SearchOutcome staged_search(const std::vector<double>& grid,
                            const std::function<double(double, double)>& score,
                            const char* stage) {
    std::map<std::pair<double, double>, double> seen;
    SearchOutcome best;
    auto run = [&](const std::vector<std::pair<double, double>>& candidates) {
        for (const auto& c : candidates) {
            auto it = seen.find(c);
            double s;
            if (it != seen.end()) {
                s = it->second;
            } else {
                s = score(c.first, c.second);
                seen.emplace(c, s);
                ++best.evaluations;
            }
            if (s < best.score) {
                best.score = s;
                best.u = c.first;
                best.v = c.second;
            }
        }
    };

    std::vector<std::pair<double, double>> diag;
    for (double v : grid) diag.emplace_back(v, v);
    run(preference_ordered(std::move(diag)));
    if (!(best.score < kInf))
        throw TuningFailure(std::string(stage) + ": every grid point scored +inf");

    std::vector<std::pair<double, double>> refine;
    for (double u : neighbor_values(grid, best.u))
        for (double v : neighbor_values(grid, best.v)) refine.emplace_back(u, v);
    run(preference_ordered(std::move(refine)));
    return best;
}

double squared_dof_deficit(double target, double tr_u, double tr_v) {
    double base = tr_u * tr_v - target;
    double denom = base * base;
    return denom < kDenomGuard ? -1.0 : denom;
}

template <typename Model>
double structured_score(const Model& model, const GramSet& gram, double numer) {
    RegularizedGram gu_eps(gram.G_U, model.reg.eps_u), gv_eps(gram.G_V, model.reg.eps_v);
    const double nm1 = static_cast<double>(gram.n - 1) * static_cast<double>(gram.r);
    double denom = squared_dof_deficit(nm1 * nm1, gu_eps.inv_gram().trace(),
                                       gv_eps.inv_gram().trace());
    if (denom < 0.0) return kInf;
    return std::max(numer, 0.0) / denom;
}

std::vector<Matrix> cp_hvals(const CpModel& model) {
    std::vector<Matrix> h(static_cast<std::size_t>(model.Uvals.rows()));
    for (Eigen::Index b = 0; b < model.Uvals.rows(); ++b) {
        Matrix hb = Matrix::Zero(model.d, model.d);
        hb.diagonal() = model.Uvals.row(b).transpose();
        h[static_cast<std::size_t>(b)] = hb;
    }
    return h;
}

} // namespace

double gcv_r(const GramSet& gram, const RegularizedGram& gu_eta, const RegularizedGram& gv_eta,
             GcvCenter center) {
    Matrix target = center == GcvCenter::Gram ? gram.G_Y : Matrix(gram.Q * gram.K_Y);
    Matrix shat = s_f_inner_matrix(gram, gu_eta, gv_eta);
    double numer = (target - shat).squaredNorm();
    const double nr = static_cast<double>(gram.rn());
    double denom = squared_dof_deficit(nr * nr, gu_eta.inv_gram().trace(),
                                       gv_eta.inv_gram().trace());
    if (denom < 0.0) return kInf;
    return numer / denom;
}

double gcv_r(const GramSet& gram, double eta_u, double eta_v, GcvCenter center) {
    if (!(eta_u > 0.0) || !(eta_v > 0.0)) throw InvalidArgument("gcv_r: eta must be positive");
    RegularizedGram gu(gram.G_U, eta_u), gv(gram.G_V, eta_v);
    return gcv_r(gram, gu, gv, center);
}

double gcv_tucker(const TuckerModel& model, const GramSet& gram, const RegularizedGram& gu_eta,
                  const RegularizedGram& gv_eta) {
    double numer =
        tucker_objective(model.Fcoef, model.Gcoef, model.Hvals, gram, gu_eta, gv_eta);
    return structured_score(model, gram, numer);
}

double gcv_tucker(const TuckerModel& model, const GramSet& gram) {
    RegularizedGram gu(gram.G_U, model.reg.eta_u), gv(gram.G_V, model.reg.eta_v);
    return gcv_tucker(model, gram, gu, gv);
}

double gcv_cp(const CpModel& model, const GramSet& gram, const RegularizedGram& gu_eta,
              const RegularizedGram& gv_eta) {
    double numer =
        tucker_objective(model.Fcoef, model.Gcoef, cp_hvals(model), gram, gu_eta, gv_eta);
    return structured_score(model, gram, numer);
}

double gcv_cp(const CpModel& model, const GramSet& gram) {
    RegularizedGram gu(gram.G_U, model.reg.eta_u), gv(gram.G_V, model.reg.eta_v);
    return gcv_cp(model, gram, gu, gv);
}

namespace {

// Shared two-stage driver; the refit callback runs one structured fit at the
// given eps pair and returns its score, stashing the model when it wins.
TuningReport run_two_stage(const GramSet& gram, const TuningGrid& grid, GcvCenter center,
                           const std::function<double(const RegularizationParams&,
                                                      const RegularizedGram&,
                                                      const RegularizedGram&)>& fit_score,
                           RegularizationParams base) {
    std::vector<double> etas = canonical_grid(grid.eta_grid, "eta");
    std::vector<double> epss = canonical_grid(grid.eps_grid, "eps");

    SearchOutcome eta_best = staged_search(
        etas, [&](double u, double v) { return gcv_r(gram, u, v, center); }, "eta stage");

    RegularizedGram gu_eta(gram.G_U, eta_best.u), gv_eta(gram.G_V, eta_best.v);
    SearchOutcome eps_best = staged_search(
        epss,
        [&](double u, double v) {
            RegularizationParams reg = base;
            reg.eta_u = eta_best.u;
            reg.eta_v = eta_best.v;
            reg.eps_u = u;
            reg.eps_v = v;
            try {
                return fit_score(reg, gu_eta, gv_eta);
            } catch (const NumericalFailure&) {
                return kInf;
            } catch (const SingularMatrix&) {
                return kInf;
            } catch (const DegenerateData&) {
                return kInf;
            }
        },
        "eps stage");

    TuningReport report;
    report.reg.eta_u = eta_best.u;
    report.reg.eta_v = eta_best.v;
    report.reg.eps_u = eps_best.u;
    report.reg.eps_v = eps_best.v;
    report.eta_score = eta_best.score;
    report.eps_score = eps_best.score;
    report.eta_evaluations = eta_best.evaluations;
    report.eps_evaluations = eps_best.evaluations;
    return report;
}

} // namespace

TuckerTuning tune_tucker(const SvdFeatureSet& features, const GramSet& gram, Eigen::Index s,
                         Eigen::Index t, const TuningGrid& grid, const FitOptions& base,
                         GcvCenter center) {
    TuckerTuning out;
    double best = kInf;
    auto fit_score = [&](const RegularizationParams& reg, const RegularizedGram& gu,
                         const RegularizedGram& gv) {
        FitOptions opts = base;
        opts.reg = reg;
        TuckerModel model = fit_tucker_prepared(features, gram, s, t, opts);
        double score = gcv_tucker(model, gram, gu, gv);
        if (score < best) {
            best = score;
            out.model = std::move(model);
        }
        return score;
    };
    out.report = run_two_stage(gram, grid, center, fit_score, base.reg);
    return out;
}

CpTuning tune_cp(const SvdFeatureSet& features, const GramSet& gram, Eigen::Index d,
                 const TuningGrid& grid, const FitOptions& base, GcvCenter center) {
    CpTuning out;
    double best = kInf;
    auto fit_score = [&](const RegularizationParams& reg, const RegularizedGram& gu,
                         const RegularizedGram& gv) {
        FitOptions opts = base;
        opts.reg = reg;
        CpModel model = fit_cp_prepared(features, gram, d, opts);
        double score = gcv_cp(model, gram, gu, gv);
        if (score < best) {
            best = score;
            out.model = std::move(model);
        }
        return score;
    };
    out.report = run_two_stage(gram, grid, center, fit_score, base.reg);
    return out;
}

} // namespace ntsdr
