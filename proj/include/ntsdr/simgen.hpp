#ifndef NTSDR_SIMGEN_HPP
#define NTSDR_SIMGEN_HPP

#include "ntsdr/metrics.hpp"
#include "ntsdr/tuning.hpp"
#include "ntsdr/types.hpp"

#include <cstdint>
#include <string>
#include <tuple>
#include <vector>

namespace ntsdr {

enum class Setting { I, II, III, IV };
enum class Design { A, B, C };

// Synthetic benchmark cell: matrix predictors with mean Theta, four signal
// settings, three predictor designs, noisy log link.
struct SimConfig {
    Setting setting = Setting::I;
    Design design = Design::A;
    Eigen::Index n = 100, p = 5, q = 5, n_test = 100;
    int n_reps = 20;
    std::uint64_t seed = 1;
    double snr_ratio = 0.25;      // var(signal) / var(noise)
    double sigma_override = -1.0; // >= 0 forces the noise SD
    // Explicit nonzero mean entries (row, col, value); empty uses the
    // setting default (Theta_11 = 5, plus Theta_22 = 5 past setting I).
    std::vector<std::tuple<Eigen::Index, Eigen::Index, double>> theta_entries;
};

void validate(const SimConfig& cfg);
Matrix theta_matrix(const SimConfig& cfg);

const char* setting_name(Setting s);
const char* design_name(Design d);
Setting parse_setting(const std::string& s);
Design parse_design(const std::string& s);

// Deterministic child-stream seeding.
std::uint64_t splitmix64(std::uint64_t& state);
std::uint64_t child_seed(std::uint64_t root, std::uint64_t stream);

// n + n_test matrices for one replication, train block first.
std::vector<Matrix> gen_predictors(const SimConfig& cfg, int rep_index);

struct ResponseSet {
    std::vector<double> y;      // signal + noise
    std::vector<double> signal; // noiseless link output
    double sigma2 = 0.0;
    int guard_clips = 0; // link or inner log arguments clipped at -1 + 1e-6
};

ResponseSet gen_response(const SimConfig& cfg, const std::vector<Matrix>& xs, int rep_index);

// True per-(sample, factor) interaction features, rows sample-major (b, i),
// one column per (k, l) product (l fast) for the grid settings or per pair k
// for the CP setting. Factor slots past a sample's effective rank evaluate
// the true functions at the zero vector, matching the padding convention.
Matrix true_structure(const SimConfig& cfg, const std::vector<Matrix>& xs);

enum class Method { Tucker, Cp, Gsir };

struct MethodConfig {
    Method method = Method::Tucker;
    Eigen::Index s = 1, t = 1; // Tucker grid
    Eigen::Index d = 1;        // CP pairs / GSIR directions
    bool tune = false;
    RegularizationParams reg; // used directly when tune is off
    TuningGrid grid;
    double rho_u = 1.0, rho_v = 1.0, rho_y = 1.0; // rho_u doubles as rho_x for GSIR
    std::string name;                             // defaults to the method tag
};

std::vector<MethodConfig> default_methods(const SimConfig& cfg);

struct ExperimentRow {
    std::string method;
    ScoreReport response;  // dCor(predicted response, test response)
    ScoreReport structure; // dCor(estimated vs true interaction features); empty for GSIR
    int failures = 0;
};

struct ExperimentResult {
    std::vector<ExperimentRow> rows;
    std::vector<double> sigma2_per_rep;
    long guard_clips = 0;
    std::vector<std::string> errors; // first message per failed (rep, method)
};

ExperimentResult run_experiment(const SimConfig& cfg, const std::vector<MethodConfig>& methods);

} // namespace ntsdr

#endif
