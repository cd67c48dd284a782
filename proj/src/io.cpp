#include "ntsdr/io.hpp"

#include "ntsdr/errors.hpp"
#include "ntsdr/operators.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

namespace ntsdr {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void reject_unknown_keys(const json& j, const std::set<std::string>& allowed,
                         const std::string& where) {
    if (!j.is_object()) throw InvalidArgument(where + ": expected a JSON object");
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!allowed.count(it.key()))
            throw InvalidArgument(where + ": unknown key '" + it.key() + "'");
}

json matrix_to_json(const Matrix& m) {
    json j;
    j["rows"] = m.rows();
    j["cols"] = m.cols();
    std::vector<double> data;
    data.reserve(static_cast<std::size_t>(m.size()));
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back(m(i, c));
    j["data"] = data;
    return j;
}

Matrix matrix_from_json(const json& j, const std::string& where) {
    reject_unknown_keys(j, {"rows", "cols", "data"}, where);
    Eigen::Index rows = j.at("rows").get<Eigen::Index>();
    Eigen::Index cols = j.at("cols").get<Eigen::Index>();
    if (rows < 0 || cols < 0) throw InvalidArgument(where + ": negative shape");
    const auto& data = j.at("data");
    if (!data.is_array() || static_cast<Eigen::Index>(data.size()) != rows * cols)
        throw InvalidArgument(where + ": data length does not match shape");
    Matrix m(rows, cols);
    std::size_t k = 0;
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index c = 0; c < cols; ++c) m(i, c) = data[k++].get<double>();
    return m;
}

json vector_to_json(const Vector& v) { return matrix_to_json(Matrix(v)); }

Vector vector_from_json(const json& j, const std::string& where) {
    Matrix m = matrix_from_json(j, where);
    if (m.cols() != 1 && m.rows() != 1 && m.size() != 0)
        throw InvalidArgument(where + ": expected a vector");
    Vector v(m.size());
    std::size_t k = 0;
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index c = 0; c < m.cols(); ++c) v(static_cast<Eigen::Index>(k++)) = m(i, c);
    return v;
}

void require_finite(const Matrix& m, const std::string& what) {
    if (!m.allFinite()) throw InvalidArgument("save_model: non-finite values in " + what);
}

json spec_to_json(const KernelSpec& s) {
    json j;
    j["family"] = "gaussian";
    j["gamma"] = s.gamma;
    j["rho"] = s.rho;
    return j;
}

KernelSpec spec_from_json(const json& j, const std::string& where) {
    reject_unknown_keys(j, {"family", "gamma", "rho"}, where);
    if (j.at("family").get<std::string>() != "gaussian")
        throw InvalidArgument(where + ": unknown kernel family");
    KernelSpec s;
    s.gamma = j.at("gamma").get<double>();
    s.rho = j.at("rho").get<double>();
    return s;
}

json features_to_json(const SvdFeatureSet& f) {
    json j;
    j["n"] = f.n;
    j["p"] = f.p;
    j["q"] = f.q;
    j["r"] = f.r;
    j["U"] = matrix_to_json(f.U);
    j["V"] = matrix_to_json(f.V);
    return j;
}

SvdFeatureSet features_from_json(const json& j, const std::string& where) {
    reject_unknown_keys(j, {"n", "p", "q", "r", "U", "V"}, where);
    SvdFeatureSet f;
    f.n = j.at("n").get<Eigen::Index>();
    f.p = j.at("p").get<Eigen::Index>();
    f.q = j.at("q").get<Eigen::Index>();
    f.r = j.at("r").get<Eigen::Index>();
    f.U = matrix_from_json(j.at("U"), where + ".U");
    f.V = matrix_from_json(j.at("V"), where + ".V");
    if (f.U.rows() != f.p || f.U.cols() != f.r * f.n || f.V.rows() != f.q ||
        f.V.cols() != f.r * f.n)
        throw InvalidArgument(where + ": factor block shapes disagree with dims");
    f.effective_rank.assign(static_cast<std::size_t>(f.n), static_cast<int>(f.r));
    return f;
}

json reg_to_json(const RegularizationParams& r) {
    json j;
    j["eta_u"] = r.eta_u;
    j["eta_v"] = r.eta_v;
    j["eps_u"] = r.eps_u;
    j["eps_v"] = r.eps_v;
    return j;
}

RegularizationParams reg_from_json(const json& j, const std::string& where) {
    reject_unknown_keys(j, {"eta_u", "eta_v", "eps_u", "eps_v"}, where);
    RegularizationParams r;
    r.eta_u = j.at("eta_u").get<double>();
    r.eta_v = j.at("eta_v").get<double>();
    r.eps_u = j.at("eps_u").get<double>();
    r.eps_v = j.at("eps_v").get<double>();
    return r;
}

json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw InvalidArgument(path + ": JSON parse error: " + e.what());
    }
    return j;
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    out << text;
    if (!out) throw IoError("short write to " + path);
}

std::string format_double(double v, const char* fmt) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), fmt, v);
    return buf;
}

} // namespace

void write_dataset(const std::string& dir, const SampleSet& data, const std::string& storage) {
    validate(data);
    if (storage != "bin" && storage != "csv")
        throw InvalidArgument("write_dataset: storage must be 'bin' or 'csv'");
    fs::create_directories(dir);

    const Eigen::Index n = data.n(), p = data.p(), q = data.q();
    std::string x_name = storage == "bin" ? "X.bin" : "X.csv";

    if (storage == "bin") {
        std::ofstream out(fs::path(dir) / x_name, std::ios::binary);
        if (!out) throw IoError("cannot write X.bin");
        for (const Matrix& x : data.X)
            for (Eigen::Index i = 0; i < p; ++i)
                for (Eigen::Index j = 0; j < q; ++j) {
                    double v = x(i, j);
                    out.write(reinterpret_cast<const char*>(&v), sizeof(double));
                }
        if (!out) throw IoError("short write to X.bin");
    } else {
        std::ostringstream os;
        for (const Matrix& x : data.X) {
            for (Eigen::Index i = 0; i < p; ++i)
                for (Eigen::Index j = 0; j < q; ++j) {
                    if (i != 0 || j != 0) os << ',';
                    os << format_double(x(i, j), "%.17g");
                }
            os << '\n';
        }
        write_text_file((fs::path(dir) / x_name).string(), os.str());
    }

    std::ostringstream ys;
    for (double v : data.y) ys << format_double(v, "%.17g") << '\n';
    write_text_file((fs::path(dir) / "y.csv").string(), ys.str());

    json manifest;
    manifest["n"] = n;
    manifest["p"] = p;
    manifest["q"] = q;
    manifest["layout"] = "row-major";
    manifest["storage"] = storage;
    manifest["x_path"] = x_name;
    manifest["y_path"] = "y.csv";
    manifest["dtype"] = "f64-le";
    write_text_file((fs::path(dir) / "manifest.json").string(), manifest.dump(2) + "\n");
}

SampleSet read_dataset(const std::string& dir) {
    json manifest = load_json_file((fs::path(dir) / "manifest.json").string());
    reject_unknown_keys(manifest, {"n", "p", "q", "layout", "storage", "x_path", "y_path", "dtype"},
                        "manifest");
    const Eigen::Index n = manifest.at("n").get<Eigen::Index>();
    const Eigen::Index p = manifest.at("p").get<Eigen::Index>();
    const Eigen::Index q = manifest.at("q").get<Eigen::Index>();
    if (n < 0 || p < 1 || q < 1) throw InvalidArgument("manifest: bad shape fields");
    if (manifest.at("layout").get<std::string>() != "row-major")
        throw InvalidArgument("manifest: unsupported layout");
    if (manifest.at("dtype").get<std::string>() != "f64-le")
        throw InvalidArgument("manifest: unsupported dtype");
    const std::string storage = manifest.at("storage").get<std::string>();
    const fs::path x_path = fs::path(dir) / manifest.at("x_path").get<std::string>();
    const fs::path y_path = fs::path(dir) / manifest.at("y_path").get<std::string>();

    SampleSet data;
    data.X.resize(static_cast<std::size_t>(n));

    if (storage == "bin") {
        std::uintmax_t expect = static_cast<std::uintmax_t>(n) * p * q * sizeof(double);
        std::error_code ec;
        std::uintmax_t actual = fs::file_size(x_path, ec);
        if (ec) throw IoError("cannot stat " + x_path.string());
        if (actual != expect)
            throw InvalidArgument("dataset payload size mismatch: expected " +
                                  std::to_string(expect) + " bytes, found " +
                                  std::to_string(actual));
        std::ifstream in(x_path, std::ios::binary);
        if (!in) throw IoError("cannot open " + x_path.string());
        for (Eigen::Index a = 0; a < n; ++a) {
            Matrix x(p, q);
            for (Eigen::Index i = 0; i < p; ++i)
                for (Eigen::Index j = 0; j < q; ++j) {
                    double v;
                    in.read(reinterpret_cast<char*>(&v), sizeof(double));
                    x(i, j) = v;
                }
            data.X[static_cast<std::size_t>(a)] = x;
        }
        if (!in) throw IoError("short read from " + x_path.string());
    } else if (storage == "csv") {
        std::ifstream in(x_path);
        if (!in) throw IoError("cannot open " + x_path.string());
        std::string line;
        Eigen::Index a = 0;
        while (std::getline(in, line)) {
            if (line.empty() && in.eof()) break;
            if (a >= n) throw InvalidArgument("dataset payload size mismatch: extra rows in X.csv");
            Matrix x(p, q);
            std::stringstream ls(line);
            std::string tok;
            Eigen::Index k = 0;
            while (std::getline(ls, tok, ',')) {
                if (k >= p * q)
                    throw InvalidArgument("dataset payload size mismatch: extra columns in X.csv");
                std::size_t pos = 0;
                double v = std::stod(tok, &pos);
                if (pos != tok.size()) throw InvalidArgument("X.csv: malformed number '" + tok + "'");
                x(k / q, k % q) = v;
                ++k;
            }
            if (k != p * q)
                throw InvalidArgument("dataset payload size mismatch: short row in X.csv");
            data.X[static_cast<std::size_t>(a++)] = x;
        }
        if (a != n) throw InvalidArgument("dataset payload size mismatch: expected " +
                                          std::to_string(n) + " rows, found " + std::to_string(a));
    } else {
        throw InvalidArgument("manifest: unsupported storage '" + storage + "'");
    }

    std::ifstream yin(y_path);
    if (!yin) throw IoError("cannot open " + y_path.string());
    std::string line;
    while (std::getline(yin, line)) {
        if (line.empty()) continue;
        std::size_t pos = 0;
        double v = std::stod(line, &pos);
        if (pos != line.size()) throw InvalidArgument("y.csv: malformed number '" + line + "'");
        data.y.push_back(v);
    }
    if (static_cast<Eigen::Index>(data.y.size()) != n)
        throw InvalidArgument("dataset payload size mismatch: y.csv has " +
                              std::to_string(data.y.size()) + " values, expected " +
                              std::to_string(n));
    // Structural checks only; fitting entry points enforce the n >= 2 sample
    // requirement themselves so that prediction over tiny (or empty) datasets works.
    for (Eigen::Index a = 0; a < n; ++a) {
        if (!data.X[static_cast<std::size_t>(a)].allFinite())
            throw InvalidArgument("dataset: non-finite predictor entries in sample " +
                                  std::to_string(a));
        if (!std::isfinite(data.y[static_cast<std::size_t>(a)]))
            throw InvalidArgument("dataset: non-finite response in sample " + std::to_string(a));
    }
    return data;
}

KrrRegressor fit_krr(const Matrix& z, const Vector& y, double rho, double eps) {
    if (z.cols() != y.size()) throw InvalidArgument("fit_krr: sample count mismatch");
    KrrRegressor krr;
    krr.active = true;
    krr.train_z = z;
    krr.spec = bandwidth_heuristic(z, rho);
    krr.eps = eps;
    krr.y_mean = y.mean();
    Matrix k = kernel_matrix(z, krr.spec);
    RegularizedGram rg(k, eps);
    Vector centered = y;
    centered.array() -= krr.y_mean;
    krr.alpha = rg.solve(centered);
    return krr;
}

Vector krr_predict(const KrrRegressor& krr, const Matrix& z_new) {
    if (!krr.active) throw InvalidArgument("krr_predict: inactive regressor");
    Matrix k = kernel_cross(krr.train_z, z_new, krr.spec);
    Vector out = k.transpose() * krr.alpha;
    out.array() += krr.y_mean;
    return out;
}

namespace {

json krr_to_json(const KrrRegressor& k) {
    json j;
    j["train_z"] = matrix_to_json(k.train_z);
    j["alpha"] = vector_to_json(k.alpha);
    j["y_mean"] = k.y_mean;
    j["spec"] = spec_to_json(k.spec);
    j["eps"] = k.eps;
    return j;
}

KrrRegressor krr_from_json(const json& j) {
    reject_unknown_keys(j, {"train_z", "alpha", "y_mean", "spec", "eps"}, "krr");
    KrrRegressor k;
    k.active = true;
    k.train_z = matrix_from_json(j.at("train_z"), "krr.train_z");
    k.alpha = vector_from_json(j.at("alpha"), "krr.alpha");
    k.y_mean = j.at("y_mean").get<double>();
    k.spec = spec_from_json(j.at("spec"), "krr.spec");
    k.eps = j.at("eps").get<double>();
    return k;
}

} // namespace

void save_model(const std::string& path, const StoredModel& model) {
    json j;
    j["format_version"] = 1;
    j["method"] = model.method;
    j["link"] = model.link.empty() ? "none" : model.link;

    if (model.method == "tucker") {
        const TuckerModel& m = model.tucker;
        require_finite(m.Fcoef, "Fcoef");
        require_finite(m.Gcoef, "Gcoef");
        for (const Matrix& h : m.Hvals) require_finite(h, "Hvals");
        require_finite(m.features.U, "features.U");
        require_finite(m.features.V, "features.V");
        json t;
        t["s"] = m.s;
        t["t"] = m.t;
        t["Fcoef"] = matrix_to_json(m.Fcoef);
        t["Gcoef"] = matrix_to_json(m.Gcoef);
        json hs = json::array();
        for (const Matrix& h : m.Hvals) hs.push_back(matrix_to_json(h));
        t["Hvals"] = hs;
        t["reg"] = reg_to_json(m.reg);
        t["rho_u"] = m.rho_u;
        t["rho_v"] = m.rho_v;
        t["rho_y"] = m.rho_y;
        t["spec_u"] = spec_to_json(m.spec_u);
        t["spec_v"] = spec_to_json(m.spec_v);
        t["features"] = features_to_json(m.features);
        j["tucker"] = t;
    } else if (model.method == "cp") {
        const CpModel& m = model.cp;
        require_finite(m.Fcoef, "Fcoef");
        require_finite(m.Gcoef, "Gcoef");
        require_finite(m.Uvals, "Uvals");
        require_finite(m.features.U, "features.U");
        require_finite(m.features.V, "features.V");
        json t;
        t["d"] = m.d;
        t["Fcoef"] = matrix_to_json(m.Fcoef);
        t["Gcoef"] = matrix_to_json(m.Gcoef);
        t["Uvals"] = matrix_to_json(m.Uvals);
        t["reg"] = reg_to_json(m.reg);
        t["rho_u"] = m.rho_u;
        t["rho_v"] = m.rho_v;
        t["rho_y"] = m.rho_y;
        t["spec_u"] = spec_to_json(m.spec_u);
        t["spec_v"] = spec_to_json(m.spec_v);
        t["features"] = features_to_json(m.features);
        j["cp"] = t;
    } else if (model.method == "gsir") {
        const GsirModel& m = model.gsir;
        require_finite(m.train_points, "train_points");
        require_finite(m.qcoord, "qcoord");
        json t;
        t["d"] = m.d;
        t["p"] = m.p;
        t["q"] = m.q;
        t["train_points"] = matrix_to_json(m.train_points);
        t["qcoord"] = matrix_to_json(m.qcoord);
        t["offset"] = vector_to_json(m.offset);
        t["spec_x"] = spec_to_json(m.spec_x);
        t["eps"] = m.eps;
        t["rho_x"] = m.rho_x;
        t["rho_y"] = m.rho_y;
        j["gsir"] = t;
    } else {
        throw InvalidArgument("save_model: unknown method '" + model.method + "'");
    }

    if (model.krr.active) j["krr"] = krr_to_json(model.krr);
    write_text_file(path, j.dump(2) + "\n");
}

StoredModel load_model(const std::string& path) {
    json j = load_json_file(path);
    reject_unknown_keys(j, {"format_version", "method", "link", "tucker", "cp", "gsir", "krr"},
                        "model");
    if (j.at("format_version").get<int>() != 1)
        throw InvalidArgument("model: unsupported format version");

    StoredModel model;
    model.method = j.at("method").get<std::string>();
    model.link = j.at("link").get<std::string>();
    if (model.link != "none" && model.link != "log1p")
        throw InvalidArgument("model: unknown link '" + model.link + "'");

    if (model.method == "tucker") {
        const json& t = j.at("tucker");
        reject_unknown_keys(t,
                            {"s", "t", "Fcoef", "Gcoef", "Hvals", "reg", "rho_u", "rho_v", "rho_y",
                             "spec_u", "spec_v", "features"},
                            "tucker");
        TuckerModel& m = model.tucker;
        m.s = t.at("s").get<Eigen::Index>();
        m.t = t.at("t").get<Eigen::Index>();
        m.Fcoef = matrix_from_json(t.at("Fcoef"), "tucker.Fcoef");
        m.Gcoef = matrix_from_json(t.at("Gcoef"), "tucker.Gcoef");
        for (const auto& h : t.at("Hvals"))
            m.Hvals.push_back(matrix_from_json(h, "tucker.Hvals"));
        m.reg = reg_from_json(t.at("reg"), "tucker.reg");
        m.rho_u = t.at("rho_u").get<double>();
        m.rho_v = t.at("rho_v").get<double>();
        m.rho_y = t.at("rho_y").get<double>();
        m.spec_u = spec_from_json(t.at("spec_u"), "tucker.spec_u");
        m.spec_v = spec_from_json(t.at("spec_v"), "tucker.spec_v");
        m.features = features_from_json(t.at("features"), "tucker.features");
    } else if (model.method == "cp") {
        const json& t = j.at("cp");
        reject_unknown_keys(t,
                            {"d", "Fcoef", "Gcoef", "Uvals", "reg", "rho_u", "rho_v", "rho_y",
                             "spec_u", "spec_v", "features"},
                            "cp");
        CpModel& m = model.cp;
        m.d = t.at("d").get<Eigen::Index>();
        m.Fcoef = matrix_from_json(t.at("Fcoef"), "cp.Fcoef");
        m.Gcoef = matrix_from_json(t.at("Gcoef"), "cp.Gcoef");
        m.Uvals = matrix_from_json(t.at("Uvals"), "cp.Uvals");
        m.reg = reg_from_json(t.at("reg"), "cp.reg");
        m.rho_u = t.at("rho_u").get<double>();
        m.rho_v = t.at("rho_v").get<double>();
        m.rho_y = t.at("rho_y").get<double>();
        m.spec_u = spec_from_json(t.at("spec_u"), "cp.spec_u");
        m.spec_v = spec_from_json(t.at("spec_v"), "cp.spec_v");
        m.features = features_from_json(t.at("features"), "cp.features");
    } else if (model.method == "gsir") {
        const json& t = j.at("gsir");
        reject_unknown_keys(
            t, {"d", "p", "q", "train_points", "qcoord", "offset", "spec_x", "eps", "rho_x",
                "rho_y"},
            "gsir");
        GsirModel& m = model.gsir;
        m.d = t.at("d").get<Eigen::Index>();
        m.p = t.at("p").get<Eigen::Index>();
        m.q = t.at("q").get<Eigen::Index>();
        m.train_points = matrix_from_json(t.at("train_points"), "gsir.train_points");
        m.qcoord = matrix_from_json(t.at("qcoord"), "gsir.qcoord");
        m.offset = vector_from_json(t.at("offset"), "gsir.offset");
        m.spec_x = spec_from_json(t.at("spec_x"), "gsir.spec_x");
        m.eps = t.at("eps").get<double>();
        m.rho_x = t.at("rho_x").get<double>();
        m.rho_y = t.at("rho_y").get<double>();
    } else {
        throw InvalidArgument("model: unknown method '" + model.method + "'");
    }

    if (j.count("krr")) model.krr = krr_from_json(j.at("krr"));
    return model;
}

namespace {

MethodConfig parse_method_json(const json& j) {
    reject_unknown_keys(j,
                        {"method", "name", "s", "t", "d", "tune", "eta_u", "eta_v", "eps_u",
                         "eps_v", "eta_grid", "eps_grid", "rho_u", "rho_v", "rho_y"},
                        "method");
    MethodConfig mc;
    std::string m = j.at("method").get<std::string>();
    if (m == "tucker")
        mc.method = Method::Tucker;
    else if (m == "cp")
        mc.method = Method::Cp;
    else if (m == "gsir")
        mc.method = Method::Gsir;
    else
        throw InvalidArgument("method: unknown method '" + m + "'");
    mc.name = j.value("name", m == "tucker" ? "ntsdr-tu" : m == "cp" ? "ntsdr-cp" : "gsir");
    if (j.count("s")) mc.s = j.at("s").get<Eigen::Index>();
    if (j.count("t")) mc.t = j.at("t").get<Eigen::Index>();
    if (j.count("d")) mc.d = j.at("d").get<Eigen::Index>();
    if (j.count("tune")) mc.tune = j.at("tune").get<bool>();
    if (j.count("eta_u")) mc.reg.eta_u = j.at("eta_u").get<double>();
    if (j.count("eta_v")) mc.reg.eta_v = j.at("eta_v").get<double>();
    if (j.count("eps_u")) mc.reg.eps_u = j.at("eps_u").get<double>();
    if (j.count("eps_v")) mc.reg.eps_v = j.at("eps_v").get<double>();
    if (j.count("eta_grid")) mc.grid.eta_grid = j.at("eta_grid").get<std::vector<double>>();
    if (j.count("eps_grid")) mc.grid.eps_grid = j.at("eps_grid").get<std::vector<double>>();
    if (j.count("rho_u")) mc.rho_u = j.at("rho_u").get<double>();
    if (j.count("rho_v")) mc.rho_v = j.at("rho_v").get<double>();
    if (j.count("rho_y")) mc.rho_y = j.at("rho_y").get<double>();
    return mc;
}

SimConfig parse_sim_json(const json& j, const std::string& where) {
    reject_unknown_keys(j,
                        {"setting", "design", "n", "p", "q", "n_test", "n_reps", "seed",
                         "snr_ratio", "sigma_override", "theta", "methods"},
                        where);
    SimConfig cfg;
    cfg.setting = parse_setting(j.at("setting").get<std::string>());
    cfg.design = parse_design(j.at("design").get<std::string>());
    cfg.n = j.at("n").get<Eigen::Index>();
    cfg.p = j.at("p").get<Eigen::Index>();
    cfg.q = j.at("q").get<Eigen::Index>();
    if (j.count("n_test")) cfg.n_test = j.at("n_test").get<Eigen::Index>();
    if (j.count("n_reps")) cfg.n_reps = j.at("n_reps").get<int>();
    if (j.count("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
    if (j.count("snr_ratio")) cfg.snr_ratio = j.at("snr_ratio").get<double>();
    if (j.count("sigma_override")) cfg.sigma_override = j.at("sigma_override").get<double>();
    if (j.count("theta")) {
        for (const auto& e : j.at("theta")) {
            if (!e.is_array() || e.size() != 3)
                throw InvalidArgument(where + ": theta entries are [row, col, value] triples");
            cfg.theta_entries.emplace_back(e[0].get<Eigen::Index>(), e[1].get<Eigen::Index>(),
                                           e[2].get<double>());
        }
    }
    validate(cfg);
    return cfg;
}

} // namespace

SimConfig parse_sim_config_file(const std::string& path) {
    json j = load_json_file(path);
    if (j.count("methods"))
        throw InvalidArgument("simulate config: 'methods' belongs to bench configs");
    return parse_sim_json(j, "config");
}

std::vector<BenchCell> parse_bench_config_file(const std::string& path) {
    json j = load_json_file(path);
    reject_unknown_keys(j, {"cells"}, "bench config");
    const auto& cells = j.at("cells");
    if (!cells.is_array() || cells.empty())
        throw InvalidArgument("bench config: 'cells' must be a nonempty array");
    std::vector<BenchCell> out;
    for (const auto& c : cells) {
        BenchCell cell;
        cell.cfg = parse_sim_json(c, "cell");
        if (c.count("methods")) {
            for (const auto& m : c.at("methods")) cell.methods.push_back(parse_method_json(m));
            if (cell.methods.empty())
                throw InvalidArgument("bench config: empty methods list in a cell");
        }
        out.push_back(std::move(cell));
    }
    return out;
}

void write_results_csv(const std::string& path, const std::vector<ResultRow>& rows) {
    std::ostringstream os;
    os << "setting,design,n,p,q,method,metric,mean,sd,n_reps,failures\n";
    for (const ResultRow& r : rows) {
        os << r.setting << ',' << r.design << ',' << r.n << ',' << r.p << ',' << r.q << ','
           << r.method << ',' << r.metric << ',';
        if (r.score.n_reps > 0)
            os << format_double(r.score.mean, "%.6f") << ',' << format_double(r.score.sd, "%.6f");
        else
            os << "nan,nan";
        os << ',' << r.score.n_reps << ',' << r.failures << '\n';
    }
    write_text_file(path, os.str());
}

std::vector<ResultRow> experiment_rows(const SimConfig& cfg, const ExperimentResult& result) {
    std::vector<ResultRow> rows;
    for (const ExperimentRow& er : result.rows) {
        ResultRow base;
        base.setting = setting_name(cfg.setting);
        base.design = design_name(cfg.design);
        base.n = cfg.n;
        base.p = cfg.p;
        base.q = cfg.q;
        base.method = er.method;
        base.failures = er.failures;

        ResultRow resp = base;
        resp.metric = "response_dcor";
        resp.score = er.response;
        rows.push_back(resp);

        if (er.structure.n_reps > 0) {
            ResultRow st = base;
            st.metric = "structure_dcor";
            st.score = er.structure;
            rows.push_back(st);
        }
    }
    return rows;
}

} // namespace ntsdr
