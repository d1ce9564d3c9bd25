// Dataset ingest (CSV/JSON), artifact export (components, residuals,
// diagnostics, tension) and the run orchestration used by the CLI.
#pragma once

#include "stfd/cable.hpp"
#include "stfd/driver.hpp"
#include "stfd/types.hpp"

#include <cstdint>
#include <filesystem>
#include <string>

namespace stfd {

// CSV schema: first column time, remaining columns the signals f^1..f^M;
// missing samples are empty cells or NaN. JSON mirrors it with "times",
// "signals" (array of rows) and optional "mask".
SignalEnsemble read_ensemble_csv(const std::filesystem::path& path,
                                 const IngestOptions& options = {});
SignalEnsemble read_ensemble_json(const std::filesystem::path& path,
                                  const IngestOptions& options = {});
SignalEnsemble read_ensemble(const std::filesystem::path& path, const IngestOptions& options = {});

void write_ensemble_csv(const std::filesystem::path& path, const SignalEnsemble& ensemble);

// components.csv: per component the phase, the instantaneous frequency in
// Hz and rad/s, and the per-signal envelopes, in full-precision decimal.
void write_components_csv(const std::filesystem::path& path, const DecompositionResult& result,
                          const VectorXd& times);

struct ComponentsFile {
    VectorXd times;
    std::vector<ImfComponent> components;
    std::vector<MatrixXd> if_hz;  // 1 x N per component as exported
};
ComponentsFile read_components_csv(const std::filesystem::path& path);

void write_residuals_csv(const std::filesystem::path& path, const MatrixXd& residuals,
                         const VectorXd& times);
void write_diagnostics_json(const std::filesystem::path& path, const DecompositionDiag& diag);
void write_tension_csv(const std::filesystem::path& path, const CableResult& cable,
                       const VectorXd& times);

// Machine-readable error report (written on nonzero exit).
std::string error_json(const Error& error);

struct RunConfig {
    std::string input_path;   // exactly one of input_path / generator
    std::string generator;    // "example1" | "two_chirp" | "cable"
    std::uint64_t seed = 0;
    int n_samples = 512;
    int m_signals = 10;
    double noise_scale = 5.0;
    std::string output_dir = ".";
    DriverConfig driver;
    CableSpec cable;
    bool cable_mode = false;
    bool center = true;
};

// Flat key = value file mirroring RunConfig (see README for keys).
RunConfig parse_config_file(const std::filesystem::path& path);
void apply_config_entry(RunConfig& config, const std::string& key, const std::string& value);

// Executes a decomposition (or cable) run and writes all artifacts into
// output_dir. Returns the process exit code: 0 success, 2 input error,
// 3 convergence failure (partial results still written).
int run(const RunConfig& config);

}  // namespace stfd
