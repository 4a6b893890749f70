#include <sys/wait.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include "doctest.h"
#include "eqe/cli/cli.hpp"
#include "eqe/core.hpp"
#include "json.hpp"

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result run(std::vector<std::string> args) {
    std::ostringstream out;
    std::ostringstream err;
    const int code = eqe::cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

class TempDir {
public:
    TempDir() {
        std::random_device rd;
        path_ = fs::temp_directory_path() / ("eqe_cli_test_" + std::to_string(rd()));
        fs::create_directories(path_);
    }
    ~TempDir() { fs::remove_all(path_); }
    std::string file(const std::string& name, const std::string& content = "") const {
        const auto p = path_ / name;
        if (!content.empty()) std::ofstream(p) << content;
        return p.string();
    }

private:
    fs::path path_;
};

std::vector<std::vector<double>> read_csv(const std::string& text, std::string* header = nullptr) {
    std::istringstream in(text);
    std::string line;
    std::getline(in, line);
    if (header) *header = line;
    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        std::vector<double> row;
        std::istringstream ls(line);
        std::string field;
        while (std::getline(ls, field, ',')) row.push_back(std::stod(field));
        rows.push_back(row);
    }
    return rows;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

const char* kRing = R"({"dim": 2, "param_form": "ring", "alpha": 8, "R": 1})";

}  // namespace

TEST_CASE("logz") {
    auto r = run({"logz", "--dim", "2", "--lambda1", "0", "--lambda2", "1"});
    REQUIRE(r.code == 0);
    auto doc = json::parse(r.out);
    CHECK(std::abs(doc["log_z"].get<double>() - std::log(std::pow(std::numbers::pi, 1.5) / 2.0)) < 1e-14);
    CHECK(doc["method"] == "pcf");

    const auto a = json::parse(run({"logz", "--dim", "7", "--lambda1", "3.5", "--lambda2", "0.2"}).out);
    const auto b = json::parse(
        run({"logz", "--dim", "7", "--lambda1", "3.5", "--lambda2", "0.2", "--method", "quad"}).out);
    CHECK(b["method"] == "quadrature");
    CHECK(std::abs(a["log_z"].get<double>() - b["log_z"].get<double>()) < 1e-8);

    r = run({"logz", "--dim", "0", "--lambda1", "0", "--lambda2", "1"});
    CHECK(r.code == 2);
    CHECK(!r.err.empty());
    CHECK(run({"logz", "--dim", "2", "--lambda1", "0", "--lambda2", "-1"}).code == 2);
    CHECK(run({"logz", "--dim", "2"}).code == 2);
    CHECK(run({"logz", "--dim", "2", "--lambda1", "0", "--lambda2", "1", "--method", "foo"}).code == 2);

    TempDir tmp;
    const auto params = tmp.file("ring.json", kRing);
    doc = json::parse(run({"logz", "--params", params}).out);
    CHECK(std::abs(doc["log_z"].get<double>() - eqe::log_norm_const(eqe::RadialParams(2, 8.0, 4.0))) < 1e-14);
}

TEST_CASE("usage errors") {
    CHECK(run({}).code == 2);
    CHECK(run({"nonsense"}).code == 2);
    CHECK(run({"entropy"}).code == 2);
    CHECK(run({"--help"}).code == 0);
}

TEST_CASE("params file validation") {
    TempDir tmp;
    const auto both = tmp.file("both.json", R"({"dim":2,"param_form":"ring","alpha":8,"R":1,"lambda1":1})");
    CHECK(run({"entropy", "--params", both}).code == 2);
    const auto bad_form = tmp.file("bad.json", R"({"dim":2,"param_form":"polar","alpha":8,"R":1})");
    CHECK(run({"entropy", "--params", bad_form}).code == 2);
    const auto not_spd = tmp.file(
        "spd.json", R"({"dim":2,"param_form":"radial","lambda1":1,"lambda2":1,"sigma":[[1,2],[2,1]]})");
    CHECK(run({"entropy", "--params", not_spd}).code == 2);
    const auto wrong_mu = tmp.file("mu.json", R"({"dim":2,"param_form":"radial","lambda1":1,"lambda2":1,"mu":[1]})");
    CHECK(run({"entropy", "--params", wrong_mu}).code == 2);
    const auto garbage = tmp.file("garbage.json", "{not json");
    CHECK(run({"entropy", "--params", garbage}).code == 2);
    CHECK(run({"entropy", "--params", tmp.file("missing.json")}).code == 2);
}

TEST_CASE("pdf-grid reproduces the ring figure") {
    TempDir tmp;
    const auto params = tmp.file("ring.json", kRing);
    const auto out = tmp.file("grid.csv");
    REQUIRE(run({"pdf-grid", "--params", params, "--xmin", "-2", "--xmax", "2", "--npts", "201", "--out", out}).code == 0);
    std::string header;
    const auto rows = read_csv(slurp(out), &header);
    CHECK(header == "x1,x2,density");
    REQUIRE(rows.size() == 201u * 201u);
    const double step = 4.0 / 200.0;
    double best = -1.0;
    double best_r = 0.0;
    double sum = 0.0;
    for (const auto& row : rows) {
        sum += row[2];
        if (row[2] > best) {
            best = row[2];
            best_r = std::hypot(row[0], row[1]);
        }
    }
    CHECK(std::abs(best_r - 1.0) <= step);
    CHECK(std::abs(sum * step * step - 1.0) < 1e-3);
    // point symmetry (x1, x2) -> (-x1, -x2): row-major order reverses
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& a = rows[i];
        const auto& b = rows[rows.size() - 1 - i];
        CHECK(std::abs(a[2] - b[2]) <= 1e-12 * std::max(a[2], 1e-300));
    }
    const auto r3 = tmp.file("d3.json", R"({"dim":3,"param_form":"radial","lambda1":1,"lambda2":1})");
    CHECK(run({"pdf-grid", "--params", r3}).code == 2);
}

TEST_CASE("sample") {
    TempDir tmp;
    const auto params = tmp.file("ring.json", kRing);
    const auto a = tmp.file("a.csv");
    const auto b = tmp.file("b.csv");
    REQUIRE(run({"sample", "--params", params, "--n", "20000", "--seed", "5", "--out", a}).code == 0);
    REQUIRE(run({"sample", "--params", params, "--n", "20000", "--seed", "5", "--out", b}).code == 0);
    CHECK(slurp(a) == slurp(b));
    std::string header;
    const auto rows = read_csv(slurp(a), &header);
    CHECK(header == "x1,x2");
    REQUIRE(rows.size() == 20000);
    double s = 0.0;
    double s2 = 0.0;
    for (const auto& row : rows) {
        const double q = row[0] * row[0] + row[1] * row[1];
        s += q;
        s2 += q * q;
    }
    const double mean = s / rows.size();
    const double se = std::sqrt((s2 / rows.size() - mean * mean) / rows.size());
    CHECK(std::abs(mean - eqe::radial_moment(eqe::RadialParams(2, 8.0, 4.0), 2)) < 4.0 * se);

    CHECK(run({"sample", "--params", params, "--n", "0", "--seed", "5"}).code == 2);
    CHECK(run({"sample", "--params", params, "--n", "10"}).code == 2);
    const auto stdout_run = run({"sample", "--params", params, "--n", "3", "--seed", "1"});
    CHECK(stdout_run.code == 0);
    CHECK(read_csv(stdout_run.out).size() == 3);
    // threads change the stream deterministically
    const auto t1 = run({"sample", "--params", params, "--n", "50", "--seed", "2", "--threads", "3"});
    const auto t2 = run({"sample", "--params", params, "--n", "50", "--seed", "2", "--threads", "3"});
    CHECK(t1.out == t2.out);
}

TEST_CASE("CSV values round-trip bit for bit") {
    TempDir tmp;
    const auto params = tmp.file(
        "e.json", R"({"dim":3,"param_form":"radial","lambda1":1.7,"lambda2":0.3,"mu":[0.1,-2,3e-5]})");
    const auto out = run({"sample", "--params", params, "--n", "200", "--seed", "11"}).out;
    std::istringstream in(out);
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
        std::istringstream ls(line);
        std::string field;
        while (std::getline(ls, field, ',')) {
            const double v = std::stod(field);
            char buf[64];
            std::snprintf(buf, sizeof buf, "%.17g", v);
            CHECK(std::stod(buf) == v);
        }
    }
}

TEST_CASE("fit round trip and output as input") {
    TempDir tmp;
    const auto params = tmp.file(
        "truth.json",
        R"({"dim":2,"param_form":"radial","lambda1":8,"lambda2":4,"mu":[1,-1],"sigma":[[2,0.3],[0.3,0.5]]})");
    const auto data = tmp.file("data.csv");
    REQUIRE(run({"sample", "--params", params, "--n", "100000", "--seed", "21", "--out", data}).code == 0);
    const auto fitted = tmp.file("fit.json");
    const auto r = run({"fit", "--input", data, "--model", "elliptical", "--out", fitted});
    REQUIRE(r.code == 0);
    const auto doc = json::parse(slurp(fitted));
    CHECK(doc["fit"]["converged"] == true);
    CHECK(doc["fit"]["feasibility"] == "interior");
    CHECK(std::abs(doc["mu"][0].get<double>() - 1.0) < 0.02);
    CHECK(std::abs(doc["mu"][1].get<double>() + 1.0) < 0.02);
    // det(Sigma) = 0.91 -> radial parameters rescale by s = sqrt(0.91)
    const double s = std::sqrt(2.0 * 0.5 - 0.09);
    CHECK(std::abs(doc["lambda1"].get<double>() / (8.0 / s) - 1.0) < 0.05);
    CHECK(std::abs(doc["lambda2"].get<double>() / (4.0 / (s * s)) - 1.0) < 0.05);

    CHECK(run({"entropy", "--params", fitted}).code == 0);
    CHECK(run({"logz", "--params", fitted}).code == 0);
    CHECK(run({"sample", "--params", fitted, "--n", "5", "--seed", "1"}).code == 0);
    CHECK(run({"pdf-grid", "--params", fitted, "--npts", "5"}).code == 0);
    CHECK(run({"marginal", "--params", fitted, "--dim1", "1", "--npts", "5"}).code == 0);

    const auto spherical = run({"fit", "--input", data, "--model", "spherical"});
    CHECK(spherical.code == 0);
    CHECK(json::parse(spherical.out)["fit"]["model"] == "spherical");
}

TEST_CASE("fit flags Gaussian data and rejects malformed CSV") {
    TempDir tmp;
    std::mt19937_64 gen(8);
    std::normal_distribution<double> n;
    std::ostringstream csv;
    csv << "x1,x2\n";
    for (int i = 0; i < 100000; ++i) csv << n(gen) << ',' << n(gen) << '\n';
    const auto gauss = tmp.file("gauss.csv", csv.str());
    const auto r = run({"fit", "--input", gauss});
    CHECK(r.code == 4);
    CHECK(r.err.find("infeasible") != std::string::npos);

    CHECK(run({"fit", "--input", tmp.file("bad.csv", "x1,x2\n1,2\n3,abc\n")}).code == 2);
    CHECK(run({"fit", "--input", tmp.file("ragged.csv", "1,2\n3\n")}).code == 2);
    CHECK(run({"fit", "--input", tmp.file("empty.csv", "x1,x2\n")}).code == 2);
    CHECK(run({"fit", "--input", tmp.file("nope.csv")}).code == 2);
}

TEST_CASE("entropy") {
    TempDir tmp;
    const auto g = tmp.file("g.json", R"({"dim":2,"param_form":"radial","lambda1":0,"lambda2":1})");
    const auto r = run({"entropy", "--params", g});
    REQUIRE(r.code == 0);
    const double h = json::parse(r.out)["entropy_nats"].get<double>();
    CHECK(std::abs(h - (0.5 + std::log(std::pow(std::numbers::pi, 1.5) / 2.0))) < 1e-13);
    // (l1, l2) -> (l1 / s, l2 / s^2) shifts the entropy by (D/2) ln s
    const auto s = tmp.file("s.json", R"({"dim":2,"param_form":"radial","lambda1":0,"lambda2":0.25})");
    const double hs = json::parse(run({"entropy", "--params", s}).out)["entropy_nats"].get<double>();
    CHECK(std::abs(hs - h - std::log(2.0)) < 1e-12);
    // Sigma adds (1/2) ln |Sigma|
    const auto e = tmp.file("e.json", R"({"dim":2,"param_form":"radial","lambda1":0,"lambda2":1,"sigma":[[4,0],[0,1]]})");
    const double he = json::parse(run({"entropy", "--params", e}).out)["entropy_nats"].get<double>();
    CHECK(std::abs(he - h - std::log(2.0)) < 1e-12);
    CHECK(run({"entropy", "--params", tmp.file("x.json", "[]")}).code == 2);
}

TEST_CASE("marginal") {
    TempDir tmp;
    const auto params = tmp.file("ring.json", kRing);
    const auto out = tmp.file("m.csv");
    const auto r = run({"marginal", "--params", params, "--dim1", "1", "--rmax", "3", "--npts", "3001", "--out", out});
    REQUIRE(r.code == 0);
    const auto peaks = json::parse(r.out)["peaks"];
    REQUIRE(peaks.size() == 1);
    CHECK(peaks[0].get<double>() > 0.0);
    CHECK(peaks[0].get<double>() < 1.0);
    std::string header;
    const auto rows = read_csv(slurp(out), &header);
    CHECK(header == "r1,marginal_density");
    // trapezoid over [-3, 3] using symmetry
    double integral = 0.0;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        integral += 0.5 * (rows[i][1] + rows[i - 1][1]) * (rows[i][0] - rows[i - 1][0]);
    }
    CHECK(std::abs(2.0 * integral - 1.0) < 1e-5);

    // stdout CSV, stderr JSON when no --out
    const auto neg = tmp.file("neg.json", R"({"dim":3,"param_form":"radial","lambda1":-1,"lambda2":2})");
    const auto m = run({"marginal", "--params", neg, "--dim1", "2", "--npts", "50"});
    REQUIRE(m.code == 0);
    const auto mrows = read_csv(m.out);
    for (std::size_t i = 1; i < mrows.size(); ++i) CHECK(mrows[i][1] < mrows[i - 1][1]);
    const auto mpeaks = json::parse(m.err)["peaks"];
    CHECK(mpeaks.size() <= 1);
    CHECK(run({"marginal", "--params", neg, "--dim1", "3"}).code == 2);
}

TEST_CASE("selfcheck") {
    const auto r = run({"selfcheck"});
    CHECK(r.code == 0);
    const auto doc = json::parse(r.out);
    CHECK(doc["passed"] == true);
    std::vector<std::string> names;
    for (const auto& c : doc["checks"]) names.push_back(c["name"]);
    for (const char* want : {"pcf_vs_quadrature", "d2_closed_form", "gradient_identity", "chain_rule",
                             "marginal_normalization", "sampler_ks", "fit_round_trip", "maxent_dominance"}) {
        CHECK(std::find(names.begin(), names.end(), want) != names.end());
        CHECK(r.err.find(want) != std::string::npos);
    }
    const auto bad = run({"selfcheck", "--inject-failure"});
    CHECK(bad.code == 5);
    CHECK(json::parse(bad.out)["passed"] == false);
}

TEST_CASE("installed binary exit codes") {
    auto status = [](const std::string& args) {
        const int raw = std::system((std::string(EQE_BINARY) + " " + args + " >/dev/null 2>&1").c_str());
        return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    };
    CHECK(status("logz --dim 2 --lambda1 0 --lambda2 1") == 0);
    CHECK(status("logz --dim 0 --lambda1 0 --lambda2 1") == 2);
    CHECK(status("selfcheck --inject-failure") == 5);
}
