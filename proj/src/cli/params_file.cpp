#include "eqe/cli/params_file.hpp"

#include <fstream>

#include "eqe/error.hpp"

namespace eqe::cli {
namespace {

double number_field(const nlohmann::json& doc, const char* key) {
    const auto it = doc.find(key);
    if (it == doc.end()) {
        throw DomainError(std::string("params file: missing \"") + key + "\"");
    }
    if (!it->is_number()) {
        throw DomainError(std::string("params file: \"") + key + "\" must be a number");
    }
    return it->get<double>();
}

}  // namespace

ParamsFile parse_params(const nlohmann::json& doc) {
    if (!doc.is_object()) {
        throw DomainError("params file: top level must be an object");
    }
    const auto dim_it = doc.find("dim");
    if (dim_it == doc.end() || !dim_it->is_number_integer()) {
        throw DomainError("params file: \"dim\" must be an integer");
    }
    const int dim = dim_it->get<int>();
    if (dim < 1) {
        throw DomainError("params file: \"dim\" must be >= 1");
    }
    const auto form_it = doc.find("param_form");
    if (form_it == doc.end() || !form_it->is_string()) {
        throw DomainError("params file: \"param_form\" must be \"radial\" or \"ring\"");
    }
    const std::string form = form_it->get<std::string>();
    const bool has_lambda = doc.contains("lambda1") || doc.contains("lambda2");
    const bool has_ring = doc.contains("alpha") || doc.contains("R");

    auto radial = [&]() -> RadialParams {
        if (form == "radial") {
            if (has_ring) {
                throw DomainError("params file: radial form must not carry alpha/R");
            }
            return {dim, number_field(doc, "lambda1"), number_field(doc, "lambda2")};
        }
        if (form == "ring") {
            if (has_lambda) {
                throw DomainError("params file: ring form must not carry lambda1/lambda2");
            }
            return ring_to_radial(RingParams(dim, number_field(doc, "alpha"), number_field(doc, "R")));
        }
        throw DomainError("params file: unknown param_form \"" + form + "\"");
    }();

    Eigen::VectorXd mu = Eigen::VectorXd::Zero(dim);
    Eigen::MatrixXd sigma = Eigen::MatrixXd::Identity(dim, dim);
    bool spherical = true;
    if (const auto it = doc.find("mu"); it != doc.end()) {
        if (!it->is_array() || static_cast<int>(it->size()) != dim) {
            throw DomainError("params file: \"mu\" must be an array of dim numbers");
        }
        for (int i = 0; i < dim; ++i) {
            if (!(*it)[i].is_number()) {
                throw DomainError("params file: \"mu\" entries must be numbers");
            }
            mu[i] = (*it)[i].get<double>();
        }
        spherical = spherical && mu.isZero(0.0);
    }
    if (const auto it = doc.find("sigma"); it != doc.end()) {
        if (!it->is_array() || static_cast<int>(it->size()) != dim) {
            throw DomainError("params file: \"sigma\" must be a dim x dim array");
        }
        for (int i = 0; i < dim; ++i) {
            const auto& row = (*it)[i];
            if (!row.is_array() || static_cast<int>(row.size()) != dim) {
                throw DomainError("params file: \"sigma\" must be a dim x dim array");
            }
            for (int j = 0; j < dim; ++j) {
                if (!row[j].is_number()) {
                    throw DomainError("params file: \"sigma\" entries must be numbers");
                }
                sigma(i, j) = row[j].get<double>();
            }
        }
        spherical = spherical && sigma.isIdentity(0.0);
    }
    return {EllipticalParams::from_covariance(mu, sigma, radial), spherical};
}

ParamsFile load_params(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw DomainError("cannot open params file " + path);
    }
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw DomainError("params file " + path + ": " + e.what());
    }
    return parse_params(doc);
}

nlohmann::json params_to_json(const EllipticalParams& p) {
    const int d = p.dim();
    const Eigen::MatrixXd sigma = p.sigma();
    nlohmann::json mu = nlohmann::json::array();
    nlohmann::json rows = nlohmann::json::array();
    for (int i = 0; i < d; ++i) {
        mu.push_back(p.mu()[i]);
        nlohmann::json row = nlohmann::json::array();
        for (int j = 0; j < d; ++j) {
            row.push_back(sigma(i, j));
        }
        rows.push_back(row);
    }
    return {
        {"dim", d},
        {"param_form", "radial"},
        {"lambda1", p.radial().lambda1()},
        {"lambda2", p.radial().lambda2()},
        {"mu", mu},
        {"sigma", rows},
    };
}

}  // namespace eqe::cli
