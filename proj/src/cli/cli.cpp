#include "eqe/cli/cli.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "eqe/cli/params_file.hpp"
#include "eqe/cli/selfcheck.hpp"
#include "eqe/condmarg.hpp"
#include "eqe/error.hpp"
#include "eqe/fit.hpp"
#include "eqe/sampling.hpp"
#include "json.hpp"

namespace eqe::cli {
namespace {

using nlohmann::json;

/// Shortest text that round-trips to the same double, at most 17 digits.
std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
    return std::string(buf, res.ptr);
}

class OutputTarget {
public:
    OutputTarget(const std::string& path, std::ostream& fallback) : stream_(&fallback) {
        if (!path.empty()) {
            file_.open(path);
            if (!file_) {
                throw DomainError("cannot open output file " + path);
            }
            stream_ = &file_;
        }
    }
    std::ostream& stream() { return *stream_; }

private:
    std::ofstream file_;
    std::ostream* stream_;
};

void write_csv_row(std::ostream& os, std::span<const double> values) {
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i > 0) os << ',';
        os << format_double(values[i]);
    }
    os << '\n';
}

std::optional<double> parse_double(std::string_view field) {
    while (!field.empty() && (field.front() == ' ' || field.front() == '\t')) field.remove_prefix(1);
    while (!field.empty() && (field.back() == ' ' || field.back() == '\t' || field.back() == '\r')) {
        field.remove_suffix(1);
    }
    if (!field.empty() && field.front() == '+') field.remove_prefix(1);
    double v = 0.0;
    const auto res = std::from_chars(field.data(), field.data() + field.size(), v);
    if (res.ec != std::errc() || res.ptr != field.data() + field.size()) {
        return std::nullopt;
    }
    return v;
}

std::vector<std::string_view> split_commas(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        const auto pos = line.find(',', start);
        out.push_back(line.substr(start, pos == std::string_view::npos ? pos : pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

/// Numeric CSV with an optional header line; every row must have the same
/// number of finite fields.
Eigen::MatrixXd read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw DomainError("cannot open input file " + path);
    }
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t line_no = 0;
    std::size_t width = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const auto fields = split_commas(line);
        std::vector<double> row;
        bool numeric = true;
        for (auto f : fields) {
            const auto v = parse_double(f);
            if (!v) {
                numeric = false;
                break;
            }
            row.push_back(*v);
        }
        if (!numeric) {
            if (rows.empty() && line_no == 1) {
                continue;  // header
            }
            throw DomainError("malformed CSV at line " + std::to_string(line_no) + " of " + path);
        }
        if (width == 0) width = row.size();
        if (row.size() != width) {
            throw DomainError("inconsistent column count at line " + std::to_string(line_no));
        }
        for (double v : row) {
            if (!std::isfinite(v)) {
                throw DomainError("non-finite value at line " + std::to_string(line_no));
            }
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) {
        throw DomainError("no data rows in " + path);
    }
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(width));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < width; ++j) {
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
        }
    }
    return m;
}

struct LogzArgs {
    std::string params;
    std::optional<int> dim;
    std::optional<double> lambda1;
    std::optional<double> lambda2;
    std::string method = "pcf";
};

int cmd_logz(const LogzArgs& a, std::ostream& out) {
    std::optional<RadialParams> p;
    if (!a.params.empty()) {
        if (a.dim || a.lambda1 || a.lambda2) {
            throw DomainError("use either --params or --dim/--lambda1/--lambda2");
        }
        p = load_params(a.params).params.radial();
    } else {
        if (!a.dim || !a.lambda1 || !a.lambda2) {
            throw DomainError("--dim, --lambda1 and --lambda2 are required without --params");
        }
        p = RadialParams(*a.dim, *a.lambda1, *a.lambda2);
    }
    const auto method = a.method == "quad" ? NormMethod::quadrature : NormMethod::pcf;
    const auto z = log_norm_const_detailed(*p, method);
    json doc{{"log_z", z.value}, {"method", to_string(z.method)}};
    if (z.fell_back) {
        doc["fell_back"] = true;
    }
    out << doc.dump() << '\n';
    return kExitOk;
}

struct GridArgs {
    std::string params;
    double xmin = -2.0;
    double xmax = 2.0;
    int npts = 201;
    std::string out;
};

int cmd_pdf_grid(const GridArgs& a, std::ostream& out) {
    const auto pf = load_params(a.params);
    if (pf.params.dim() != 2) {
        throw DomainError("pdf-grid supports dim = 2 only");
    }
    if (a.npts < 2 || !(a.xmin < a.xmax)) {
        throw DomainError("pdf-grid needs --npts >= 2 and --xmin < --xmax");
    }
    const auto& r = pf.params.radial();
    const double log_z = log_norm_const(r) + 0.5 * pf.params.log_det_sigma();
    OutputTarget target(a.out, out);
    auto& os = target.stream();
    os << "x1,x2,density\n";
    const double step = (a.xmax - a.xmin) / (a.npts - 1);
    for (int i = 0; i < a.npts; ++i) {
        const double x1 = a.xmin + i * step;
        for (int j = 0; j < a.npts; ++j) {
            const double x2 = a.xmin + j * step;
            const std::array<double, 2> x{x1, x2};
            const double q = pf.params.whiten(x).squaredNorm();
            const std::array<double, 3> row{x1, x2,
                                            std::exp(q * (r.lambda1() - r.lambda2() * q) - log_z)};
            write_csv_row(os, row);
        }
    }
    return kExitOk;
}

struct SampleArgs {
    std::string params;
    long long n = 0;
    std::optional<std::uint64_t> seed;
    std::string out;
    unsigned threads = 1;
};

int cmd_sample(const SampleArgs& a, std::ostream& out) {
    if (a.n < 1) {
        throw DomainError("--n must be >= 1");
    }
    if (!a.seed) {
        throw DomainError("--seed is required (sampling is always explicitly seeded)");
    }
    const auto pf = load_params(a.params);
    const Eigen::MatrixXd x =
        a.threads <= 1
            ? [&] {
                  SeededGenerator gen(*a.seed);
                  return sample(pf.params, static_cast<std::size_t>(a.n), gen);
              }()
            : sample_parallel(pf.params, static_cast<std::size_t>(a.n), *a.seed, a.threads);
    OutputTarget target(a.out, out);
    auto& os = target.stream();
    for (int j = 0; j < x.cols(); ++j) {
        os << (j ? "," : "") << 'x' << j + 1;
    }
    os << '\n';
    std::vector<double> row(static_cast<std::size_t>(x.cols()));
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        for (Eigen::Index j = 0; j < x.cols(); ++j) {
            row[static_cast<std::size_t>(j)] = x(i, j);
        }
        write_csv_row(os, row);
    }
    return kExitOk;
}

struct FitArgs {
    std::string input;
    std::string model = "elliptical";
    std::string out;
};

int cmd_fit(const FitArgs& a, std::ostream& out, std::ostream& err) {
    const Eigen::MatrixXd data = read_csv(a.input);
    const auto model = a.model == "spherical" ? FitModel::spherical : FitModel::elliptical;
    const FitReport report = fit_data(data, model);
    const auto& params = std::get<EllipticalParams>(report.params);
    json doc = params_to_json(params);
    json trace = json::array();
    for (const auto& t : report.trace) {
        trace.push_back({{"lambda1", t.lambda1},
                         {"lambda2", t.lambda2},
                         {"objective", t.objective},
                         {"step", t.step_length}});
    }
    doc["fit"] = {
        {"model", a.model},
        {"iterations", report.iterations},
        {"residual", {report.residual[0], report.residual[1]}},
        {"converged", report.converged},
        {"feasibility", to_string(report.feasibility)},
        {"targets", {{"c2", report.targets.c2()}, {"c4", report.targets.c4()}}},
        {"trace", trace},
    };
    {
        OutputTarget target(a.out, out);
        target.stream() << doc.dump(2) << '\n';
    }
    if (report.feasibility != Feasibility::interior) {
        err << "infeasible: sample kurtosis ratio " << report.targets.kurtosis_ratio()
            << " is within sampling error of the Gaussian limit "
            << gaussian_kurtosis_ratio(params.dim()) << "\n";
        return kExitInfeasible;
    }
    return kExitOk;
}

int cmd_entropy(const std::string& params, std::ostream& out) {
    const auto pf = load_params(params);
    // x = mu + L z adds ln|L| = (1/2) ln|Sigma|.
    const double h = entropy(pf.params.radial()) + 0.5 * pf.params.log_det_sigma();
    out << json{{"entropy_nats", h}}.dump() << '\n';
    return kExitOk;
}

struct MarginalArgs {
    std::string params;
    int dim1 = 1;
    double rmax = 2.0;
    int npts = 201;
    std::string out;
};

int cmd_marginal(const MarginalArgs& a, std::ostream& out, std::ostream& err) {
    const auto pf = load_params(a.params);
    const auto& r = pf.params.radial();
    if (a.dim1 < 1 || a.dim1 >= r.dim()) {
        throw DomainError("--dim1 must be in [1, dim - 1]");
    }
    if (a.npts < 2 || !(a.rmax > 0.0)) {
        throw DomainError("marginal needs --npts >= 2 and --rmax > 0");
    }
    const BlockSplit split(a.dim1, r.dim() - a.dim1);
    const auto peaks = marginal_peaks(r, split);
    json doc{{"dim1", a.dim1}, {"peaks", peaks}};
    {
        OutputTarget target(a.out, out);
        auto& os = target.stream();
        os << "r1,marginal_density\n";
        for (int i = 0; i < a.npts; ++i) {
            const double r1 = a.rmax * i / (a.npts - 1);
            const std::array<double, 2> row{r1, std::exp(marginal_log_density_sq(r, split, r1 * r1))};
            write_csv_row(os, row);
        }
    }
    (a.out.empty() ? err : out) << doc.dump() << '\n';
    return kExitOk;
}

int cmd_selfcheck(bool inject_failure, std::ostream& out, std::ostream& err) {
    const auto results = run_selfcheck({.inject_failure = inject_failure});
    bool all = true;
    json checks = json::array();
    for (const auto& c : results) {
        all = all && c.passed;
        err << (c.passed ? "PASS " : "FAIL ") << c.name << "  worst=" << c.worst
            << " tol=" << c.tolerance << (c.detail.empty() ? "" : "  " + c.detail) << '\n';
        checks.push_back({{"name", c.name},
                          {"passed", c.passed},
                          {"worst", c.worst},
                          {"tolerance", c.tolerance},
                          {"detail", c.detail}});
    }
    out << json{{"passed", all}, {"checks", checks}}.dump(2) << '\n';
    return all ? kExitOk : kExitSelfcheckFailed;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Quartic-exponential (EQE) distribution toolkit", "eqe"};
    app.require_subcommand(1);

    LogzArgs logz;
    auto* c_logz = app.add_subcommand("logz", "Log normalization constant ln Z_D");
    c_logz->add_option("--params", logz.params, "Parameter JSON file");
    c_logz->add_option("--dim", logz.dim, "Dimension D");
    c_logz->add_option("--lambda1", logz.lambda1, "lambda1");
    c_logz->add_option("--lambda2", logz.lambda2, "lambda2 (> 0)");
    c_logz->add_option("--method", logz.method, "pcf | quad")->check(CLI::IsMember({"pcf", "quad"}));

    GridArgs grid;
    auto* c_grid = app.add_subcommand("pdf-grid", "Density on an N x N grid (dim 2)");
    c_grid->add_option("--params", grid.params)->required();
    c_grid->add_option("--xmin", grid.xmin);
    c_grid->add_option("--xmax", grid.xmax);
    c_grid->add_option("--npts", grid.npts);
    c_grid->add_option("--out", grid.out, "CSV file (default stdout)");

    SampleArgs samp;
    auto* c_sample = app.add_subcommand("sample", "Draw samples as CSV");
    c_sample->add_option("--params", samp.params)->required();
    c_sample->add_option("--n", samp.n)->required();
    c_sample->add_option("--seed", samp.seed);
    c_sample->add_option("--out", samp.out, "CSV file (default stdout)");
    c_sample->add_option("--threads", samp.threads, "Worker streams (changes the output)");

    FitArgs fit;
    auto* c_fit = app.add_subcommand("fit", "Moment fit from CSV data");
    c_fit->add_option("--input", fit.input)->required();
    c_fit->add_option("--model", fit.model)->check(CLI::IsMember({"spherical", "elliptical"}));
    c_fit->add_option("--out", fit.out, "JSON file (default stdout)");

    std::string entropy_params;
    auto* c_entropy = app.add_subcommand("entropy", "Differential entropy in nats");
    c_entropy->add_option("--params", entropy_params)->required();

    MarginalArgs marg;
    auto* c_marg = app.add_subcommand("marginal", "Marginal density of the leading block");
    c_marg->add_option("--params", marg.params)->required();
    c_marg->add_option("--dim1", marg.dim1)->required();
    c_marg->add_option("--rmax", marg.rmax);
    c_marg->add_option("--npts", marg.npts);
    c_marg->add_option("--out", marg.out, "CSV file; peaks JSON then goes to stdout");

    bool inject_failure = false;
    auto* c_self = app.add_subcommand("selfcheck", "Run the built-in oracle suite");
    c_self->add_flag("--inject-failure", inject_failure)->group("");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (c_logz->parsed()) return cmd_logz(logz, out);
        if (c_grid->parsed()) return cmd_pdf_grid(grid, out);
        if (c_sample->parsed()) return cmd_sample(samp, out);
        if (c_fit->parsed()) return cmd_fit(fit, out, err);
        if (c_entropy->parsed()) return cmd_entropy(entropy_params, out);
        if (c_marg->parsed()) return cmd_marginal(marg, out, err);
        if (c_self->parsed()) return cmd_selfcheck(inject_failure, out, err);
    } catch (const InfeasibleError& e) {
        err << "infeasible: " << e.what() << '\n';
        return kExitInfeasible;
    } catch (const ConvergenceError& e) {
        err << "numerical failure: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const DomainError& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const nlohmann::json::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    }
    return kExitUsage;
}

}  // namespace eqe::cli
