#ifndef NTSDR_IO_HPP
#define NTSDR_IO_HPP

#include "ntsdr/cp.hpp"
#include "ntsdr/gsir.hpp"
#include "ntsdr/simgen.hpp"
#include "ntsdr/tucker.hpp"

#include <string>
#include <vector>

namespace ntsdr {

// Dataset directory: manifest.json + X payload + y.csv. The binary payload
// is flat little-endian f64, row-major within a sample, samples outermost;
// the CSV alternative holds one sample per line (p*q values). Any size
// mismatch against the declared shape is rejected before use.
void write_dataset(const std::string& dir, const SampleSet& data,
                   const std::string& storage = "bin");
SampleSet read_dataset(const std::string& dir);

// Optional post-hoc kernel ridge regression of the response on fitted
// sufficient predictors — harness machinery for data without a known link.
struct KrrRegressor {
    bool active = false;
    Matrix train_z; // dim x n predictor vectors
    Vector alpha;
    double y_mean = 0.0;
    KernelSpec spec;
    double eps = 1e-3;
};

KrrRegressor fit_krr(const Matrix& z, const Vector& y, double rho = 1.0, double eps = 1e-3);
Vector krr_predict(const KrrRegressor& krr, const Matrix& z_new);

// One serialized estimator plus optional response link / regressor.
struct StoredModel {
    std::string method; // "tucker" | "cp" | "gsir"
    std::string link;   // "none" | "log1p"
    TuckerModel tucker;
    CpModel cp;
    GsirModel gsir;
    KrrRegressor krr;
};

// JSON model files; numeric payloads survive save/load bitwise. Non-finite
// values are rejected at save time.
void save_model(const std::string& path, const StoredModel& model);
StoredModel load_model(const std::string& path);

// Benchmark configuration: a list of simulation cells with method lists.
struct BenchCell {
    SimConfig cfg;
    std::vector<MethodConfig> methods; // empty: per-setting defaults
};

SimConfig parse_sim_config_file(const std::string& path);
std::vector<BenchCell> parse_bench_config_file(const std::string& path);

// Table-style results CSV rows.
struct ResultRow {
    std::string setting, design;
    Eigen::Index n = 0, p = 0, q = 0;
    std::string method, metric;
    ScoreReport score;
    int failures = 0;
};

void write_results_csv(const std::string& path, const std::vector<ResultRow>& rows);

std::vector<ResultRow> experiment_rows(const SimConfig& cfg, const ExperimentResult& result);

} // namespace ntsdr

#endif
