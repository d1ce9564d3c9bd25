#include "stfd/io.hpp"

#include "stfd/generators.hpp"
#include "stfd/spectral.hpp"

#include <json.hpp>

#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace stfd {

namespace {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) {
        while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
        std::size_t start = 0;
        while (start < cell.size() && cell[start] == ' ') ++start;
        cells.push_back(cell.substr(start));
    }
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

bool parse_cell(const std::string& cell, double* out) {
    if (cell.empty()) return false;
    std::string lower;
    for (char c : cell) lower.push_back(static_cast<char>(std::tolower(c)));
    if (lower == "nan") return false;
    std::size_t pos = 0;
    *out = std::stod(cell, &pos);
    if (pos != cell.size())
        throw Error(ErrorKind::IoError, "csv: malformed number '" + cell + "'");
    return true;
}

bool looks_numeric(const std::string& cell) {
    if (cell.empty()) return true;  // empty = missing value
    try {
        std::size_t pos = 0;
        (void)std::stod(cell, &pos);
        return pos == cell.size();
    } catch (...) {
        std::string lower;
        for (char c : cell) lower.push_back(static_cast<char>(std::tolower(c)));
        return lower == "nan";
    }
}

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorKind::IoError, "cannot open for writing: " + path.string());
    return out;
}

}  // namespace

SignalEnsemble read_ensemble_csv(const std::filesystem::path& path, const IngestOptions& options) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::IoError, "cannot open: " + path.string());

    std::vector<std::vector<std::string>> rows;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        auto cells = split_csv_line(line);
        if (first) {
            first = false;
            bool header = false;
            for (const auto& c : cells)
                if (!looks_numeric(c)) header = true;
            if (header) continue;
        }
        rows.push_back(std::move(cells));
    }
    if (rows.empty())
        throw Error(ErrorKind::ShapeMismatch, "csv: no data rows in " + path.string());

    const std::size_t n_cols = rows[0].size();
    if (n_cols < 2)
        throw Error(ErrorKind::ShapeMismatch, "csv: need a time column and at least one signal");
    const Eigen::Index n = static_cast<Eigen::Index>(rows.size());
    const Eigen::Index m = static_cast<Eigen::Index>(n_cols - 1);

    VectorXd times(n);
    MatrixXd values(m, n);
    BoolMatrix mask = BoolMatrix::Constant(m, n, true);
    for (Eigen::Index i = 0; i < n; ++i) {
        if (rows[i].size() != n_cols)
            throw Error(ErrorKind::ShapeMismatch,
                        "csv: row " + std::to_string(i + 1) + " has " +
                            std::to_string(rows[i].size()) + " cells, expected " +
                            std::to_string(n_cols));
        double t;
        if (!parse_cell(rows[i][0], &t))
            throw Error(ErrorKind::IoError, "csv: missing time in row " + std::to_string(i + 1));
        times[i] = t;
        for (Eigen::Index j = 0; j < m; ++j) {
            double v = 0.0;
            if (parse_cell(rows[i][j + 1], &v)) {
                values(j, i) = v;
            } else {
                values(j, i) = std::numeric_limits<double>::quiet_NaN();
                mask(j, i) = false;
            }
        }
    }
    return ingest(times, values, mask, options);
}

SignalEnsemble read_ensemble_json(const std::filesystem::path& path,
                                  const IngestOptions& options) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::IoError, "cannot open: " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw Error(ErrorKind::IoError, std::string("json parse: ") + e.what());
    }
    if (!j.contains("times") || !j.contains("signals"))
        throw Error(ErrorKind::ShapeMismatch, "json: need 'times' and 'signals'");

    const auto& jt = j["times"];
    const auto& js = j["signals"];
    const Eigen::Index n = static_cast<Eigen::Index>(jt.size());
    const Eigen::Index m = static_cast<Eigen::Index>(js.size());
    if (m < 1) throw Error(ErrorKind::ShapeMismatch, "json: empty signals");

    VectorXd times(n);
    for (Eigen::Index i = 0; i < n; ++i) times[i] = jt[i].get<double>();
    MatrixXd values(m, n);
    BoolMatrix mask = BoolMatrix::Constant(m, n, true);
    for (Eigen::Index r = 0; r < m; ++r) {
        if (static_cast<Eigen::Index>(js[r].size()) != n)
            throw Error(ErrorKind::ShapeMismatch, "json: signal row length mismatch");
        for (Eigen::Index i = 0; i < n; ++i) {
            if (js[r][i].is_null()) {
                values(r, i) = std::numeric_limits<double>::quiet_NaN();
                mask(r, i) = false;
            } else {
                values(r, i) = js[r][i].get<double>();
            }
        }
    }
    if (j.contains("mask")) {
        const auto& jm = j["mask"];
        for (Eigen::Index r = 0; r < m; ++r)
            for (Eigen::Index i = 0; i < n; ++i)
                if (!jm[r][i].get<bool>()) mask(r, i) = false;
    }
    return ingest(times, values, mask, options);
}

SignalEnsemble read_ensemble(const std::filesystem::path& path, const IngestOptions& options) {
    if (path.extension() == ".json") return read_ensemble_json(path, options);
    return read_ensemble_csv(path, options);
}

void write_ensemble_csv(const std::filesystem::path& path, const SignalEnsemble& ensemble) {
    std::ofstream out = open_out(path);
    out << "time";
    for (Eigen::Index j = 0; j < ensemble.n_signals(); ++j) out << ",f" << (j + 1);
    out << "\n";
    for (Eigen::Index i = 0; i < ensemble.n_samples(); ++i) {
        out << format_double(ensemble.times[i]);
        for (Eigen::Index j = 0; j < ensemble.n_signals(); ++j) {
            out << ",";
            if (ensemble.mask(j, i)) out << format_double(ensemble.values(j, i));
        }
        out << "\n";
    }
}

void write_components_csv(const std::filesystem::path& path, const DecompositionResult& result,
                          const VectorXd& times) {
    std::ofstream out = open_out(path);
    const std::size_t k_total = result.components.size();

    out << "time";
    for (std::size_t k = 0; k < k_total; ++k) {
        const Eigen::Index m = result.components[k].envelopes_a.rows();
        out << ",theta" << (k + 1) << ",if_hz" << (k + 1) << ",if_rads" << (k + 1);
        for (Eigen::Index j = 0; j < m; ++j) out << ",a" << (k + 1) << "_s" << (j + 1);
        for (Eigen::Index j = 0; j < m; ++j) out << ",b" << (k + 1) << "_s" << (j + 1);
    }
    out << "\n";

    std::vector<VectorXd> omega(k_total);
    for (std::size_t k = 0; k < k_total; ++k)
        omega[k] = fd_derivative(result.components[k].phase.theta(), times);

    for (Eigen::Index i = 0; i < times.size(); ++i) {
        out << format_double(times[i]);
        for (std::size_t k = 0; k < k_total; ++k) {
            const ImfComponent& c = result.components[k];
            out << "," << format_double(c.phase.theta()[i]);
            out << "," << format_double(omega[k][i] / (2.0 * M_PI));
            out << "," << format_double(omega[k][i]);
            for (Eigen::Index j = 0; j < c.envelopes_a.rows(); ++j)
                out << "," << format_double(c.envelopes_a(j, i));
            for (Eigen::Index j = 0; j < c.envelopes_b.rows(); ++j)
                out << "," << format_double(c.envelopes_b(j, i));
        }
        out << "\n";
    }
}

ComponentsFile read_components_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::IoError, "cannot open: " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw Error(ErrorKind::IoError, "components csv: empty file");
    const auto header = split_csv_line(line);

    // Layout per component: theta, if_hz, if_rads, a*_s1.., b*_s1..
    struct Block {
        std::size_t start;
        Eigen::Index m;
    };
    std::vector<Block> blocks;
    for (std::size_t c = 1; c < header.size();) {
        if (header[c].rfind("theta", 0) != 0)
            throw Error(ErrorKind::IoError, "components csv: unexpected column " + header[c]);
        std::size_t e = c + 3;
        Eigen::Index m = 0;
        while (e < header.size() && header[e][0] == 'a') {
            ++m;
            ++e;
        }
        blocks.push_back({c, m});
        c = e + m;
    }

    std::vector<std::vector<double>> data;
    while (std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const auto cells = split_csv_line(line);
        std::vector<double> row(cells.size());
        for (std::size_t c = 0; c < cells.size(); ++c) {
            double v = 0.0;
            parse_cell(cells[c], &v);
            row[c] = v;
        }
        data.push_back(std::move(row));
    }
    const Eigen::Index n = static_cast<Eigen::Index>(data.size());

    ComponentsFile file;
    file.times.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) file.times[i] = data[i][0];
    for (const Block& blk : blocks) {
        VectorXd theta(n);
        MatrixXd if_hz(1, n), a(blk.m, n), b(blk.m, n);
        for (Eigen::Index i = 0; i < n; ++i) {
            theta[i] = data[i][blk.start];
            if_hz(0, i) = data[i][blk.start + 1];
            for (Eigen::Index j = 0; j < blk.m; ++j) {
                a(j, i) = data[i][blk.start + 3 + j];
                b(j, i) = data[i][blk.start + 3 + blk.m + j];
            }
        }
        file.components.push_back(
            ImfComponent{PhaseFunction(theta), a, b, MatrixXd(a.array().square() + b.array().square())});
        file.if_hz.push_back(if_hz);
    }
    return file;
}

void write_residuals_csv(const std::filesystem::path& path, const MatrixXd& residuals,
                         const VectorXd& times) {
    std::ofstream out = open_out(path);
    out << "time";
    for (Eigen::Index j = 0; j < residuals.rows(); ++j) out << ",r" << (j + 1);
    out << "\n";
    for (Eigen::Index i = 0; i < times.size(); ++i) {
        out << format_double(times[i]);
        for (Eigen::Index j = 0; j < residuals.rows(); ++j)
            out << "," << format_double(residuals(j, i));
        out << "\n";
    }
}

void write_diagnostics_json(const std::filesystem::path& path, const DecompositionDiag& diag) {
    nlohmann::json j;
    j["component_cap_reached"] = diag.component_cap_reached;
    j["rejected_trailing_component"] = diag.rejected_trailing_component;
    j["prefilled_missing"] = diag.prefilled_missing;
    j["residual_norms"] = diag.residual_norms;
    j["components"] = nlohmann::json::array();
    for (const ComponentDiag& c : diag.components) {
        nlohmann::json jc;
        jc["total_iterations"] = c.total_iterations;
        jc["final_update_norm"] = c.final_update_norm;
        jc["energy_reduction"] = c.energy_reduction;
        jc["initial_guess_bin"] = c.initial_guess_bin;
        jc["phase_offset_folded"] = c.phase_offset_folded;
        jc["alm_unconverged_calls"] = c.alm_unconverged_calls;
        jc["eta_trace"] = nlohmann::json::array();
        for (const EtaStageDiag& s : c.stages) {
            jc["eta_trace"].push_back({{"eta", s.eta},
                                       {"iterations", s.iterations},
                                       {"final_update_norm", s.final_update_norm},
                                       {"min_beta", s.min_beta}});
        }
        j["components"].push_back(std::move(jc));
    }
    std::ofstream out = open_out(path);
    out << j.dump(2) << "\n";
}

void write_tension_csv(const std::filesystem::path& path, const CableResult& cable,
                       const VectorXd& times) {
    std::ofstream out = open_out(path);
    out << "time,theta1,omega1_rads,omega1_hz,force_n\n";
    for (Eigen::Index i = 0; i < times.size(); ++i) {
        out << format_double(times[i]) << "," << format_double(cable.theta[i]) << ","
            << format_double(cable.omega1[i]) << ","
            << format_double(cable.omega1[i] / (2.0 * M_PI)) << ","
            << format_double(cable.force[i]) << "\n";
    }
}

std::string error_json(const Error& error) {
    nlohmann::json j;
    j["error"]["type"] = error_kind_name(error.kind());
    j["error"]["message"] = error.what();
    return j.dump(2);
}

RunConfig parse_config_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::IoError, "cannot open config: " + path.string());
    RunConfig config;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) {
            if (line.find_first_not_of(" \t\r") != std::string::npos)
                throw Error(ErrorKind::IoError,
                            "config line " + std::to_string(line_no) + ": expected key = value");
            continue;
        }
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r");
            const auto e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        apply_config_entry(config, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    return config;
}

void apply_config_entry(RunConfig& config, const std::string& key, const std::string& value) {
    auto mode_of = [](const std::string& v) {
        if (v == "periodic") return SolveMode::periodic;
        if (v == "nonperiodic") return SolveMode::nonperiodic;
        if (v == "robust") return SolveMode::robust;
        throw Error(ErrorKind::InvalidArgument, "unknown mode: " + v);
    };
    if (key == "input") config.input_path = value;
    else if (key == "generator") config.generator = value;
    else if (key == "seed") config.seed = std::stoull(value);
    else if (key == "samples") config.n_samples = std::stoi(value);
    else if (key == "signals") config.m_signals = std::stoi(value);
    else if (key == "noise") config.noise_scale = std::stod(value);
    else if (key == "output") config.output_dir = value;
    else if (key == "mode") config.driver.mode = mode_of(value);
    else if (key == "tol") config.driver.residual_tol = std::stod(value);
    else if (key == "max_components") config.driver.max_components = std::stoi(value);
    else if (key == "center") config.center = (value == "true" || value == "1");
    else if (key == "gn_epsilon0") config.driver.gn.epsilon_0 = std::stod(value);
    else if (key == "gn_eta_step") config.driver.gn.eta_step = std::stod(value);
    else if (key == "gn_lambda") config.driver.gn.lambda = std::stod(value);
    else if (key == "gn_max_inner_iters") config.driver.gn.max_inner_iters = std::stoi(value);
    else if (key == "alm_gamma") config.driver.alm.gamma = std::stod(value);
    else if (key == "alm_tol_rel") config.driver.alm.tol_rel = std::stod(value);
    else if (key == "alm_max_iters") config.driver.alm.max_iters = std::stoi(value);
    else if (key == "cable_mass_density") config.cable.mass_density = std::stod(value);
    else if (key == "cable_length") config.cable.length = std::stod(value);
    else if (key == "cable_modes") {
        config.cable.modes.clear();
        std::stringstream ss(value);
        std::string item;
        while (std::getline(ss, item, ',')) config.cable.modes.push_back(std::stoi(item));
        config.cable_mode = true;
    } else {
        throw Error(ErrorKind::InvalidArgument, "unknown config key: " + key);
    }
}

namespace {

SignalEnsemble make_input(const RunConfig& config) {
    const bool has_input = !config.input_path.empty();
    const bool has_generator = !config.generator.empty();
    if (has_input == has_generator)
        throw Error(ErrorKind::InvalidArgument,
                    "exactly one of input path / generator must be given");
    if (has_input) return read_ensemble(config.input_path, IngestOptions{config.center});

    if (config.generator == "example1")
        return generate_example1(config.seed, config.n_samples, config.m_signals,
                                 config.noise_scale);
    if (config.generator == "two_chirp")
        return generate_two_chirp(config.n_samples, config.m_signals);
    if (config.generator == "cable") {
        CableSpec spec = config.cable;
        if (spec.modes.empty()) spec.modes = {1, 2, 3, 4, 5};
        return generate_cable(config.seed, spec, config.n_samples, config.m_signals,
                              config.noise_scale);
    }
    throw Error(ErrorKind::InvalidArgument, "unknown generator: " + config.generator);
}

}  // namespace

int run(const RunConfig& config) {
    try {
        const std::filesystem::path out_dir(config.output_dir);
        std::filesystem::create_directories(out_dir);
        const SignalEnsemble ensemble = make_input(config);

        if (config.cable_mode) {
            const CableResult cable = harmonic_fuse(ensemble, config.cable, config.driver);
            write_tension_csv(out_dir / "tension.csv", cable, ensemble.times);
            DecompositionDiag diag;
            diag.components.push_back(cable.diag);
            write_diagnostics_json(out_dir / "diagnostics.json", diag);
            return 0;
        }

        try {
            const DecompositionResult result = decompose(ensemble, config.driver);
            write_components_csv(out_dir / "components.csv", result, ensemble.times);
            write_residuals_csv(out_dir / "residuals.csv", result.residuals, ensemble.times);
            write_diagnostics_json(out_dir / "diagnostics.json", result.diagnostics);
        } catch (const NoConvergenceError& e) {
            write_components_csv(out_dir / "components.csv", e.partial_result, ensemble.times);
            write_residuals_csv(out_dir / "residuals.csv", e.partial_result.residuals,
                                ensemble.times);
            write_diagnostics_json(out_dir / "diagnostics.json", e.partial_result.diagnostics);
            fprintf(stderr, "%s\n", error_json(e).c_str());
            return 3;
        }
        return 0;
    } catch (const Error& e) {
        fprintf(stderr, "%s\n", error_json(e).c_str());
        switch (e.kind()) {
            case ErrorKind::NoConvergence:
            case ErrorKind::MaxItersExceeded:
                return 3;
            default:
                return 2;
        }
    }
}

}  // namespace stfd
