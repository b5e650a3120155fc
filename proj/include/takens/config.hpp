#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "takens/util.hpp"

namespace takens {

inline constexpr int kSchemaVersion = 1;

/// Flat key = value experiment configuration. '#' starts a comment; unknown
/// keys are rejected so typos fail loudly.
struct ExperimentConfig {
    std::string system = "henon";
    Eigen::VectorXd k_center = Eigen::VectorXd::Zero(2);
    double k_radius = 1.35;
    double kplus_radius = 0.0;  // 0: defaults to 2 * k_radius
    int embedding_dimension = 10;
    double delta = 0.01;
    double a0 = 0.0;  // 0: auto-selected
    double a1 = 1e-4;
    int n_points = 1000;
    int n_pairs = 20000;
    int n_coeff_draws = 100;
    std::uint64_t master_seed = 12345;
    std::vector<double> scale_ladder{0.25, 0.125, 0.0625, 0.03125, 0.015625};
    std::string out_dir = "takens-out";
    unsigned threads = 0;  // 0: hardware concurrency
    bool include_zero_control = false;
    int cloud_size = 4000;
    int attractor_burn_in = 1000;
    int attractor_stride = 7;
    int basis_degree = 0;      // 0: defaults to 2D - 1
    double cover_epsilon = 0;  // 0: defaults to 5 * delta
    int fixed_point_seeds = 128;
    double pair_overlap_fraction = 0.1;
    int sigma_c_samples = 3;
    int pair_cloud_size = 1500;

    int resolved_basis_degree() const {
        return basis_degree > 0 ? basis_degree : 2 * embedding_dimension - 1;
    }
    double resolved_kplus_radius() const {
        return kplus_radius > 0.0 ? kplus_radius : 2.0 * k_radius;
    }
    double resolved_cover_epsilon() const {
        return cover_epsilon > 0.0 ? cover_epsilon : 5.0 * delta;
    }

    void validate() const {
        if (embedding_dimension < 1) throw std::invalid_argument("config: D must be positive");
        if (!(k_radius > 0.0)) throw std::invalid_argument("config: degenerate working region K");
        if (resolved_kplus_radius() <= k_radius) {
            throw std::invalid_argument("config: K+ must strictly contain K");
        }
        if (!(delta > 0.0)) throw std::invalid_argument("config: delta must be positive");
        if (n_points < 1 || n_pairs < 1 || n_coeff_draws < 1 || cloud_size < 1) {
            throw std::invalid_argument("config: sample counts must be positive");
        }
        if (scale_ladder.empty()) throw std::invalid_argument("config: empty scale ladder");
        if (pair_overlap_fraction < 0.0 || pair_overlap_fraction > 1.0) {
            throw std::invalid_argument("config: pair_overlap_fraction outside [0, 1]");
        }
        if (!(a1 > 0.0)) throw std::invalid_argument("config: a1 must be positive");
    }

    static ExperimentConfig from_file(const std::string& path);
    static ExperimentConfig from_string(const std::string& text);
    std::string echo() const;
};

namespace detail {

inline std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r\n");
    return s.substr(begin, end - begin + 1);
}

inline std::vector<double> parse_double_list(const std::string& value) {
    std::vector<double> out;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(std::stod(item));
    }
    return out;
}

}  // namespace detail

inline ExperimentConfig ExperimentConfig::from_string(const std::string& text) {
    ExperimentConfig cfg;
    std::stringstream stream(text);
    std::string line;
    int line_number = 0;
    while (std::getline(stream, line)) {
        ++line_number;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw std::invalid_argument("config line " + std::to_string(line_number) +
                                        ": expected key = value");
        }
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string value = detail::trim(line.substr(eq + 1));
        try {
            if (key == "system") {
                cfg.system = value;
            } else if (key == "k_center") {
                const auto vals = detail::parse_double_list(value);
                cfg.k_center = Eigen::Map<const Eigen::VectorXd>(
                    vals.data(), static_cast<Eigen::Index>(vals.size()));
            } else if (key == "k_radius") {
                cfg.k_radius = std::stod(value);
            } else if (key == "kplus_radius") {
                cfg.kplus_radius = std::stod(value);
            } else if (key == "embedding_dimension") {
                cfg.embedding_dimension = std::stoi(value);
            } else if (key == "delta") {
                cfg.delta = std::stod(value);
            } else if (key == "a0") {
                cfg.a0 = (value == "auto") ? 0.0 : std::stod(value);
            } else if (key == "a1") {
                cfg.a1 = std::stod(value);
            } else if (key == "n_points") {
                cfg.n_points = std::stoi(value);
            } else if (key == "n_pairs") {
                cfg.n_pairs = std::stoi(value);
            } else if (key == "n_coeff_draws") {
                cfg.n_coeff_draws = std::stoi(value);
            } else if (key == "master_seed") {
                cfg.master_seed = std::stoull(value);
            } else if (key == "scale_ladder") {
                cfg.scale_ladder = detail::parse_double_list(value);
            } else if (key == "out_dir") {
                cfg.out_dir = value;
            } else if (key == "threads") {
                cfg.threads = static_cast<unsigned>(std::stoul(value));
            } else if (key == "include_zero_control") {
                cfg.include_zero_control = (value == "1" || value == "true");
            } else if (key == "cloud_size") {
                cfg.cloud_size = std::stoi(value);
            } else if (key == "attractor_burn_in") {
                cfg.attractor_burn_in = std::stoi(value);
            } else if (key == "attractor_stride") {
                cfg.attractor_stride = std::stoi(value);
            } else if (key == "basis_degree") {
                cfg.basis_degree = (value == "auto") ? 0 : std::stoi(value);
            } else if (key == "cover_epsilon") {
                cfg.cover_epsilon = std::stod(value);
            } else if (key == "fixed_point_seeds") {
                cfg.fixed_point_seeds = std::stoi(value);
            } else if (key == "pair_overlap_fraction") {
                cfg.pair_overlap_fraction = std::stod(value);
            } else if (key == "sigma_c_samples") {
                cfg.sigma_c_samples = std::stoi(value);
            } else if (key == "pair_cloud_size") {
                cfg.pair_cloud_size = std::stoi(value);
            } else if (key == "schema_version") {
                if (std::stoi(value) != kSchemaVersion) {
                    throw std::invalid_argument("unsupported schema_version " + value);
                }
            } else {
                throw std::invalid_argument("unknown key '" + key + "'");
            }
        } catch (const std::invalid_argument&) {
            throw;
        } catch (const std::exception& e) {
            throw std::invalid_argument("config line " + std::to_string(line_number) + " (" + key +
                                        "): " + e.what());
        }
    }
    cfg.validate();
    return cfg;
}

inline ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("config: cannot open " + path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    return from_string(buffer.str());
}

inline std::string ExperimentConfig::echo() const {
    std::string s;
    s += "schema_version = " + std::to_string(kSchemaVersion) + "\n";
    s += "system = " + system + "\n";
    s += "k_center = ";
    for (Eigen::Index i = 0; i < k_center.size(); ++i) {
        if (i) s += ",";
        s += format_double(k_center[i]);
    }
    s += "\n";
    s += "k_radius = " + format_double(k_radius) + "\n";
    s += "kplus_radius = " + format_double(resolved_kplus_radius()) + "\n";
    s += "embedding_dimension = " + std::to_string(embedding_dimension) + "\n";
    s += "delta = " + format_double(delta) + "\n";
    s += "a0 = " + (a0 > 0.0 ? format_double(a0) : std::string("auto")) + "\n";
    s += "a1 = " + format_double(a1) + "\n";
    s += "n_points = " + std::to_string(n_points) + "\n";
    s += "n_pairs = " + std::to_string(n_pairs) + "\n";
    s += "n_coeff_draws = " + std::to_string(n_coeff_draws) + "\n";
    s += "master_seed = " + std::to_string(master_seed) + "\n";
    s += "scale_ladder = ";
    for (std::size_t i = 0; i < scale_ladder.size(); ++i) {
        if (i) s += ",";
        s += format_double(scale_ladder[i]);
    }
    s += "\n";
    s += "out_dir = " + out_dir + "\n";
    s += "threads = " + std::to_string(threads) + "\n";
    s += "include_zero_control = " + std::string(include_zero_control ? "1" : "0") + "\n";
    s += "cloud_size = " + std::to_string(cloud_size) + "\n";
    s += "attractor_burn_in = " + std::to_string(attractor_burn_in) + "\n";
    s += "attractor_stride = " + std::to_string(attractor_stride) + "\n";
    s += "basis_degree = " + std::to_string(resolved_basis_degree()) + "\n";
    s += "cover_epsilon = " + format_double(resolved_cover_epsilon()) + "\n";
    s += "fixed_point_seeds = " + std::to_string(fixed_point_seeds) + "\n";
    s += "pair_overlap_fraction = " + format_double(pair_overlap_fraction) + "\n";
    s += "sigma_c_samples = " + std::to_string(sigma_c_samples) + "\n";
    s += "pair_cloud_size = " + std::to_string(pair_cloud_size) + "\n";
    return s;
}

}  // namespace takens
