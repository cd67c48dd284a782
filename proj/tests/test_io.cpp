#include "ntsdr/errors.hpp"
#include "ntsdr/io.hpp"

#include <doctest.h>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "dense_oracle.hpp"

using namespace ntsdr;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& tag) {
        path = fs::temp_directory_path() / ("ntsdr_test_" + tag);
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string str() const { return path.string(); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

void dump(const std::string& path, const json& j) {
    std::ofstream f(path);
    f << j.dump(2);
}

json slurp(const std::string& path) {
    std::ifstream f(path);
    json j;
    f >> j;
    return j;
}

} // namespace

TEST_SUITE("io") {

    TEST_CASE("binary dataset round trip is bitwise") {
        TempDir dir("ds_bin");
        SampleSet data = oracle::random_samples(3, 2, 3, 501);
        write_dataset(dir.str(), data, "bin");
        CHECK(fs::file_size(dir.path / "X.bin") == 3u * 2u * 3u * sizeof(double));

        SampleSet back = read_dataset(dir.str());
        REQUIRE(back.n() == 3);
        REQUIRE(back.p() == 2);
        REQUIRE(back.q() == 3);
        for (int a = 0; a < 3; ++a)
            CHECK((back.X[a] - data.X[a]).cwiseAbs().maxCoeff() == 0.0);
        for (int a = 0; a < 3; ++a) CHECK(back.y[a] == data.y[a]);
    }

    TEST_CASE("csv dataset round trip is exact") {
        TempDir dir("ds_csv");
        SampleSet data = oracle::random_samples(4, 2, 2, 503);
        write_dataset(dir.str(), data, "csv");
        SampleSet back = read_dataset(dir.str());
        REQUIRE(back.n() == 4);
        for (int a = 0; a < 4; ++a)
            CHECK((back.X[a] - data.X[a]).cwiseAbs().maxCoeff() == 0.0);
    }

    TEST_CASE("payload size mismatches are rejected") {
        TempDir dir("ds_bad");
        SampleSet data = oracle::random_samples(3, 2, 2, 507);
        write_dataset(dir.str(), data, "bin");

        json manifest = slurp(dir.file("manifest.json"));
        manifest["n"] = 4;
        dump(dir.file("manifest.json"), manifest);
        CHECK_THROWS_AS(read_dataset(dir.str()), InvalidArgument);

        manifest["n"] = 3;
        manifest["extra"] = 1;
        dump(dir.file("manifest.json"), manifest);
        CHECK_THROWS_AS(read_dataset(dir.str()), InvalidArgument);

        manifest.erase("extra");
        dump(dir.file("manifest.json"), manifest);
        fs::resize_file(dir.path / "X.bin", 3 * 2 * 2 * sizeof(double) - 8);
        CHECK_THROWS_AS(read_dataset(dir.str()), InvalidArgument);
    }

    TEST_CASE("model files round-trip tucker evaluation bitwise") {
        TempDir dir("model_tu");
        SampleSet data = oracle::random_samples(10, 2, 2, 509);
        FitOptions opts;
        opts.max_iter = 5;
        StoredModel sm;
        sm.method = "tucker";
        sm.link = "log1p";
        sm.tucker = fit_tucker(data, 1, 1, opts);

        std::vector<Matrix> before = evaluate_tucker(sm.tucker, data.X);
        save_model(dir.file("m.json"), sm);
        StoredModel back = load_model(dir.file("m.json"));
        CHECK(back.method == "tucker");
        CHECK(back.link == "log1p");
        std::vector<Matrix> after = evaluate_tucker(back.tucker, data.X);
        REQUIRE(after.size() == before.size());
        for (std::size_t i = 0; i < after.size(); ++i)
            CHECK((after[i] - before[i]).cwiseAbs().maxCoeff() == 0.0);

        sm.tucker.Fcoef(0, 0) = std::nan("");
        CHECK_THROWS_AS(save_model(dir.file("bad.json"), sm), InvalidArgument);
    }

    TEST_CASE("model files round-trip cp and gsir with a regressor") {
        TempDir dir("model_cp");
        SampleSet data = oracle::random_samples(12, 2, 2, 511);

        StoredModel sm;
        sm.method = "cp";
        sm.link = "none";
        sm.cp = fit_cp(data, 1, {});
        Matrix z = evaluate_cp(sm.cp, data.X).transpose();
        Vector y = Eigen::Map<const Vector>(data.y.data(), 12);
        sm.krr = fit_krr(z, y);

        Matrix before = evaluate_cp(sm.cp, data.X);
        Vector pred_before = krr_predict(sm.krr, z);
        save_model(dir.file("m.json"), sm);
        StoredModel back = load_model(dir.file("m.json"));
        CHECK(back.krr.active);
        Matrix after = evaluate_cp(back.cp, data.X);
        CHECK((after - before).cwiseAbs().maxCoeff() == 0.0);
        Vector pred_after = krr_predict(back.krr, z);
        CHECK((pred_after - pred_before).cwiseAbs().maxCoeff() == 0.0);

        StoredModel gs;
        gs.method = "gsir";
        gs.link = "none";
        gs.gsir = fit_gsir(data, 1);
        Matrix gb = evaluate_gsir(gs.gsir, data.X);
        save_model(dir.file("g.json"), gs);
        StoredModel gback = load_model(dir.file("g.json"));
        Matrix ga = evaluate_gsir(gback.gsir, data.X);
        CHECK((ga - gb).cwiseAbs().maxCoeff() == 0.0);
    }

    TEST_CASE("model files reject unknown keys and versions") {
        TempDir dir("model_bad");
        SampleSet data = oracle::random_samples(8, 2, 2, 513);
        StoredModel sm;
        sm.method = "gsir";
        sm.gsir = fit_gsir(data, 1);
        save_model(dir.file("m.json"), sm);

        json j = slurp(dir.file("m.json"));
        j["surprise"] = true;
        dump(dir.file("m.json"), j);
        CHECK_THROWS_AS(load_model(dir.file("m.json")), InvalidArgument);

        j.erase("surprise");
        j["format_version"] = 2;
        dump(dir.file("m.json"), j);
        CHECK_THROWS_AS(load_model(dir.file("m.json")), InvalidArgument);
    }

    TEST_CASE("simulation configs parse strictly") {
        TempDir dir("cfg");
        json cfg{{"setting", "I"}, {"design", "A"}, {"n", 8},      {"p", 3},
                 {"q", 3},         {"n_test", 4},   {"n_reps", 1}, {"seed", 5}};
        dump(dir.file("sim.json"), cfg);
        SimConfig parsed = parse_sim_config_file(dir.file("sim.json"));
        CHECK(parsed.n == 8);
        CHECK(parsed.setting == Setting::I);

        cfg["mystery"] = 1;
        dump(dir.file("sim.json"), cfg);
        CHECK_THROWS_AS(parse_sim_config_file(dir.file("sim.json")), InvalidArgument);
        cfg.erase("mystery");

        cfg["setting"] = "V";
        dump(dir.file("sim.json"), cfg);
        CHECK_THROWS_AS(parse_sim_config_file(dir.file("sim.json")), InvalidArgument);
        cfg["setting"] = "I";

        cfg["methods"] = json::array();
        dump(dir.file("sim.json"), cfg);
        CHECK_THROWS_AS(parse_sim_config_file(dir.file("sim.json")), InvalidArgument);
    }

    TEST_CASE("bench configs carry cells with optional method lists") {
        TempDir dir("bench");
        json cell{{"setting", "III"}, {"design", "B"}, {"n", 12},     {"p", 3},
                  {"q", 3},           {"n_test", 6},   {"n_reps", 2}, {"seed", 1}};
        cell["methods"] = json::array(
            {json{{"method", "tucker"}, {"s", 2}, {"t", 2}},
             json{{"method", "gsir"}, {"d", 2}, {"name", "baseline"}}});
        json cfg{{"cells", json::array({cell})}};
        dump(dir.file("bench.json"), cfg);

        std::vector<BenchCell> cells = parse_bench_config_file(dir.file("bench.json"));
        REQUIRE(cells.size() == 1);
        CHECK(cells[0].cfg.setting == Setting::III);
        REQUIRE(cells[0].methods.size() == 2);
        CHECK(cells[0].methods[0].method == Method::Tucker);
        CHECK(cells[0].methods[0].s == 2);
        CHECK(cells[0].methods[1].name == "baseline");

        json empty{{"cells", json::array()}};
        dump(dir.file("bench.json"), empty);
        CHECK_THROWS_AS(parse_bench_config_file(dir.file("bench.json")), InvalidArgument);
    }

    TEST_CASE("results csv format is pinned") {
        TempDir dir("csv");
        ResultRow row;
        row.setting = "I";
        row.design = "A";
        row.n = 16;
        row.p = 3;
        row.q = 3;
        row.method = "ntsdr-tu";
        row.metric = "response_dcor";
        row.score = summarize({0.25, 0.75});
        row.failures = 1;

        ResultRow empty = row;
        empty.metric = "structure_dcor";
        empty.score = summarize({});
        empty.failures = 2;

        write_results_csv(dir.file("r.csv"), {row, empty});
        std::ifstream f(dir.file("r.csv"));
        std::string text((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
        CHECK(text ==
              "setting,design,n,p,q,method,metric,mean,sd,n_reps,failures\n"
              "I,A,16,3,3,ntsdr-tu,response_dcor,0.500000,0.353553,2,1\n"
              "I,A,16,3,3,ntsdr-tu,structure_dcor,nan,nan,0,2\n");
    }
}
