#pragma once

#include "matstein/distributions.hpp"

#include <json.hpp>

#include <iosfwd>
#include <optional>
#include <string>

namespace matstein {

using Json = nlohmann::json;

std::string fnv1a64_hex(const std::string& bytes);
/// Hash of the canonical (sorted-key, compact) dump of a config.
std::string config_hash_hex(const Json& config);

Json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const Json& j);
SymPD sympd_from_json(const Json& j);

/// Standardized sum of n_sum iid Rademacher-entry matrices, one stream per
/// replicate.
SampleBatch make_rademacher_sum_batch(int nu, int d, long n_sum, Eigen::Index count,
                                      std::uint64_t seed, int threads = 1);

struct ExperimentOutput {
    Json artifact;                    // JSON artifact with provenance block
    std::optional<std::string> csv;   // CSV artifact body when format = csv
    std::optional<SampleBatch> batch; // batch payload for the sample experiment
    std::string batch_layout;         // "binary" or "csv" when batch is set
};

/// Validates and runs one experiment config; throws ValidationError /
/// NumericalError on failure.
ExperimentOutput run_experiment(const Json& config, int threads);

/// CLI entry: loads the config, runs it, writes artifacts, reports wall time
/// on err.  Returns the process exit code (0 ok, 1 validation, 2 numerical).
int run_experiment_file(const std::string& config_path,
                        const std::string& output_override, int threads, std::ostream& err);

/// Recomputes the config hash and checks it against the artifact's embedded
/// provenance (JSON artifacts and CSV artifacts with a hash comment line).
int verify_artifact_file(const std::string& config_path, const std::string& artifact_path,
                         std::ostream& err);

}  // namespace matstein
