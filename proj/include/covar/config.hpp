// Experiment configuration: JSON in, fully-resolved values out. Every field
// except `experiment` and `seed` has a documented default; the effective
// configuration is echoed into the run manifest.
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "covar/embedding.hpp"
#include "covar/mlp.hpp"
#include "covar/pretrain.hpp"
#include "covar/siamese.hpp"
#include "covar/synthdata.hpp"

namespace covar {

enum class Experiment { spinning_sprites, two_modalities, rotation_invariance };

const char* to_string(Experiment e);
Experiment experiment_from_string(const std::string& name);

struct NetSpec {
    std::vector<Index> hidden;
    Index output = 100;
    Activation hidden_activation = Activation::tanh;
    Activation output_activation = Activation::linear;

    std::vector<LayerSpec> layer_specs() const;
};

enum class EmbedSplit { train, test, all };

struct EmbedSpec {
    EmbeddingMethod method = EmbeddingMethod::diffusion;
    Index k = 2;
    EmbedSplit split = EmbedSplit::test;
    std::optional<double> bandwidth;
};

struct ExperimentConfig {
    Experiment experiment = Experiment::two_modalities;
    std::uint64_t seed = 0;
    Index n_pairs = 10000;
    double test_fraction = 0.2;

    NetSpec net1;
    NetSpec net2;
    double output_init_scale = 0.1;

    bool pretrain_enabled = true;
    DaeConfig dae;

    TrainConfig train;

    EmbedSpec embedding;

    // two_modalities
    Index tm_T = kTwoModalitiesDefaultT;
    double tm_omega_min = kTwoModalitiesOmegaMin;
    double tm_omega_max = kTwoModalitiesOmegaMax;
    std::string tm_base_image; // PGM path; empty = procedural default

    // rotation_invariance
    Index rot_corpus_size = 200;
    std::string rot_images_dir; // PGM directory; empty = procedural corpus
    Index rot_trials = 2000;

    std::string out_dir = "out";

    /// Sensor dimensionalities implied by the experiment.
    std::pair<Index, Index> input_dims() const;
};

/// Parses and validates; `seed_override` (from the CVL_SEED environment
/// variable) wins over the file. Throws ConfigError naming the field path.
ExperimentConfig parse_config(const nlohmann::json& j,
                              std::optional<std::uint64_t> seed_override = std::nullopt);

ExperimentConfig load_config_file(const std::string& path,
                                  std::optional<std::uint64_t> seed_override = std::nullopt);

/// The fully-resolved configuration as JSON (what the manifest records).
nlohmann::json effective_config(const ExperimentConfig& cfg);

} // namespace covar
