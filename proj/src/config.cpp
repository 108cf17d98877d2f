#include "covar/config.hpp"

#include <fstream>

#include "covar/error.hpp"
#include "covar/synthdata.hpp"

namespace covar {

using nlohmann::json;

const char* to_string(Experiment e) {
    switch (e) {
        case Experiment::spinning_sprites: return "spinning_sprites";
        case Experiment::two_modalities: return "two_modalities";
        case Experiment::rotation_invariance: return "rotation_invariance";
    }
    return "?";
}

Experiment experiment_from_string(const std::string& name) {
    if (name == "spinning_sprites") return Experiment::spinning_sprites;
    if (name == "two_modalities") return Experiment::two_modalities;
    if (name == "rotation_invariance") return Experiment::rotation_invariance;
    throw ConfigError("experiment: unknown value '" + name + "'");
}

std::vector<LayerSpec> NetSpec::layer_specs() const {
    std::vector<LayerSpec> specs;
    specs.reserve(hidden.size() + 1);
    for (Index h : hidden) specs.push_back({h, hidden_activation});
    specs.push_back({output, output_activation});
    return specs;
}

std::pair<Index, Index> ExperimentConfig::input_dims() const {
    switch (experiment) {
        case Experiment::spinning_sprites:
            return {SpriteScene::flat_dim, SpriteScene::flat_dim};
        case Experiment::two_modalities:
            return {2 * kImageSide * kImageSide, tm_T};
        case Experiment::rotation_invariance:
            return {kImageSide * kImageSide, kImageSide * kImageSide};
    }
    return {0, 0};
}

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& why) {
    throw ConfigError(path + ": " + why);
}

const json* find(const json& j, const char* key) {
    auto it = j.find(key);
    return it == j.end() ? nullptr : &*it;
}

double get_num(const json& j, const std::string& path, const char* key, double fallback) {
    const json* v = find(j, key);
    if (v == nullptr) return fallback;
    if (!v->is_number()) fail(path + "." + key, "expected a number");
    return v->get<double>();
}

Index get_index(const json& j, const std::string& path, const char* key, Index fallback) {
    const json* v = find(j, key);
    if (v == nullptr) return fallback;
    if (!v->is_number_integer()) fail(path + "." + key, "expected an integer");
    return v->get<Index>();
}

std::string get_str(const json& j, const std::string& path, const char* key,
                    const std::string& fallback) {
    const json* v = find(j, key);
    if (v == nullptr) return fallback;
    if (!v->is_string()) fail(path + "." + key, "expected a string");
    return v->get<std::string>();
}

bool get_bool(const json& j, const std::string& path, const char* key, bool fallback) {
    const json* v = find(j, key);
    if (v == nullptr) return fallback;
    if (!v->is_boolean()) fail(path + "." + key, "expected a boolean");
    return v->get<bool>();
}

NetSpec parse_net(const json* j, const std::string& path, NetSpec defaults) {
    if (j == nullptr) return defaults;
    NetSpec spec = defaults;
    if (const json* hidden = find(*j, "hidden")) {
        if (!hidden->is_array()) fail(path + ".hidden", "expected an array of integers");
        spec.hidden.clear();
        for (const json& h : *hidden) {
            if (!h.is_number_integer() || h.get<Index>() < 1) {
                fail(path + ".hidden", "entries must be integers >= 1");
            }
            spec.hidden.push_back(h.get<Index>());
        }
    }
    spec.output = get_index(*j, path, "output", spec.output);
    if (spec.output < 1) fail(path + ".output", "must be >= 1");
    try {
        spec.hidden_activation = activation_from_string(
            get_str(*j, path, "hidden_activation", to_string(spec.hidden_activation)));
        spec.output_activation = activation_from_string(
            get_str(*j, path, "output_activation", to_string(spec.output_activation)));
    } catch (const ConfigError& e) {
        fail(path, e.what());
    }
    return spec;
}

} // namespace

ExperimentConfig parse_config(const json& j, std::optional<std::uint64_t> seed_override) {
    if (!j.is_object()) throw ConfigError("config: expected a JSON object");

    ExperimentConfig cfg;

    const json* exp = find(j, "experiment");
    if (exp == nullptr || !exp->is_string()) fail("experiment", "required string field");
    cfg.experiment = experiment_from_string(exp->get<std::string>());

    if (seed_override.has_value()) {
        cfg.seed = *seed_override;
    } else {
        const json* seed = find(j, "seed");
        if (seed == nullptr) fail("seed", "required (or set CVL_SEED)");
        if (!seed->is_number_integer() || seed->get<double>() < 0) {
            fail("seed", "expected a non-negative integer");
        }
        cfg.seed = seed->get<std::uint64_t>();
    }

    cfg.n_pairs = get_index(j, "", "n_pairs", cfg.n_pairs);
    if (cfg.n_pairs < 2) fail("n_pairs", "must be >= 2");
    cfg.test_fraction = get_num(j, "", "test_fraction", cfg.test_fraction);
    if (!(cfg.test_fraction > 0.0 && cfg.test_fraction < 1.0)) {
        fail("test_fraction", "must be in (0, 1)");
    }

    // Experiment-appropriate network defaults, overridable per branch.
    NetSpec default_net;
    default_net.hidden = cfg.experiment == Experiment::spinning_sprites
                             ? std::vector<Index>{150, 150}
                             : std::vector<Index>{100, 100};
    default_net.output = 100;
    cfg.net1 = parse_net(find(j, "net1"), "net1", default_net);
    cfg.net2 = parse_net(find(j, "net2"), "net2", default_net);
    if (cfg.net1.output != cfg.net2.output) {
        fail("net1.output / net2.output", "branch output dims must match");
    }

    cfg.output_init_scale = get_num(j, "", "output_init_scale", cfg.output_init_scale);
    if (!(cfg.output_init_scale > 0.0)) fail("output_init_scale", "must be > 0");

    if (const json* pre = find(j, "pretrain")) {
        if (!pre->is_object()) fail("pretrain", "expected an object");
        cfg.pretrain_enabled = get_bool(*pre, "pretrain", "enabled", cfg.pretrain_enabled);
        cfg.dae.corruption_probability =
            get_num(*pre, "pretrain", "corruption_probability", cfg.dae.corruption_probability);
        cfg.dae.sparsity_target = get_num(*pre, "pretrain", "sparsity_target", cfg.dae.sparsity_target);
        cfg.dae.sparsity_weight = get_num(*pre, "pretrain", "sparsity_weight", cfg.dae.sparsity_weight);
        cfg.dae.epochs = get_index(*pre, "pretrain", "epochs", cfg.dae.epochs);
        cfg.dae.learning_rate = get_num(*pre, "pretrain", "learning_rate", cfg.dae.learning_rate);
        cfg.dae.batch_size = get_index(*pre, "pretrain", "batch_size", cfg.dae.batch_size);
    }
    if (!(cfg.dae.corruption_probability >= 0.0 && cfg.dae.corruption_probability < 1.0)) {
        fail("pretrain.corruption_probability", "must be in [0, 1)");
    }
    if (!(cfg.dae.sparsity_target > 0.0 && cfg.dae.sparsity_target < 1.0)) {
        fail("pretrain.sparsity_target", "must be in (0, 1)");
    }
    if (cfg.dae.sparsity_weight < 0.0) fail("pretrain.sparsity_weight", "must be >= 0");
    if (cfg.dae.epochs < 0) fail("pretrain.epochs", "must be >= 0");
    if (!(cfg.dae.learning_rate > 0.0)) fail("pretrain.learning_rate", "must be > 0");
    if (cfg.dae.batch_size < 1) fail("pretrain.batch_size", "must be >= 1");

    if (const json* train = find(j, "train")) {
        if (!train->is_object()) fail("train", "expected an object");
        cfg.train.loss.alpha = get_num(*train, "train", "alpha", cfg.train.loss.alpha);
        cfg.train.loss.beta = get_num(*train, "train", "beta", cfg.train.loss.beta);
        cfg.train.loss.lambda = get_num(*train, "train", "lambda", cfg.train.loss.lambda);
        const std::string opt = get_str(*train, "train", "optimizer", "sgd_momentum");
        if (opt == "sgd_momentum") {
            cfg.train.optimizer = Optimizer::sgd_momentum;
        } else if (opt == "lbfgs") {
            cfg.train.optimizer = Optimizer::lbfgs;
        } else {
            fail("train.optimizer", "expected 'sgd_momentum' or 'lbfgs'");
        }
        if (const json* sgd = find(*train, "sgd")) {
            if (!sgd->is_object()) fail("train.sgd", "expected an object");
            cfg.train.sgd.learning_rate =
                get_num(*sgd, "train.sgd", "learning_rate", cfg.train.sgd.learning_rate);
            cfg.train.sgd.momentum = get_num(*sgd, "train.sgd", "momentum", cfg.train.sgd.momentum);
            cfg.train.sgd.batch_size =
                get_index(*sgd, "train.sgd", "batch_size", cfg.train.sgd.batch_size);
            cfg.train.sgd.epochs = get_index(*sgd, "train.sgd", "epochs", cfg.train.sgd.epochs);
            cfg.train.sgd.keep_probability =
                get_num(*sgd, "train.sgd", "keep_probability", cfg.train.sgd.keep_probability);
        }
        if (const json* lbfgs = find(*train, "lbfgs")) {
            if (!lbfgs->is_object()) fail("train.lbfgs", "expected an object");
            cfg.train.lbfgs.history =
                get_index(*lbfgs, "train.lbfgs", "history", cfg.train.lbfgs.history);
            cfg.train.lbfgs.max_iters =
                get_index(*lbfgs, "train.lbfgs", "max_iters", cfg.train.lbfgs.max_iters);
            cfg.train.lbfgs.c1 = get_num(*lbfgs, "train.lbfgs", "c1", cfg.train.lbfgs.c1);
            cfg.train.lbfgs.backtrack =
                get_num(*lbfgs, "train.lbfgs", "backtrack", cfg.train.lbfgs.backtrack);
            cfg.train.lbfgs.grad_tol =
                get_num(*lbfgs, "train.lbfgs", "grad_tol", cfg.train.lbfgs.grad_tol);
        }
    }
    if (cfg.train.loss.alpha < 0 || cfg.train.loss.beta < 0 || cfg.train.loss.lambda < 0) {
        fail("train.alpha/beta/lambda", "must be >= 0");
    }
    if (cfg.train.loss.alpha == 0 && cfg.train.loss.beta == 0 && cfg.train.loss.lambda == 0) {
        fail("train.alpha/beta/lambda", "must not all be zero");
    }
    if (!(cfg.train.sgd.learning_rate > 0.0)) fail("train.sgd.learning_rate", "must be > 0");
    if (!(cfg.train.sgd.momentum >= 0.0 && cfg.train.sgd.momentum < 1.0)) {
        fail("train.sgd.momentum", "must be in [0, 1)");
    }
    if (cfg.train.sgd.batch_size < 2) fail("train.sgd.batch_size", "must be >= 2");
    if (cfg.train.sgd.epochs < 0) fail("train.sgd.epochs", "must be >= 0");
    if (!(cfg.train.sgd.keep_probability > 0.0 && cfg.train.sgd.keep_probability <= 1.0)) {
        fail("train.sgd.keep_probability", "must be in (0, 1]");
    }
    if (cfg.train.lbfgs.history < 1) fail("train.lbfgs.history", "must be >= 1");
    if (cfg.train.lbfgs.max_iters < 0) fail("train.lbfgs.max_iters", "must be >= 0");
    if (!(cfg.train.lbfgs.c1 > 0.0 && cfg.train.lbfgs.c1 < 1.0)) {
        fail("train.lbfgs.c1", "must be in (0, 1)");
    }
    if (!(cfg.train.lbfgs.backtrack > 0.0 && cfg.train.lbfgs.backtrack < 1.0)) {
        fail("train.lbfgs.backtrack", "must be in (0, 1)");
    }
    cfg.train.seed = cfg.seed;

    if (const json* embed = find(j, "embedding")) {
        if (!embed->is_object()) fail("embedding", "expected an object");
        try {
            cfg.embedding.method = embedding_method_from_string(
                get_str(*embed, "embedding", "method", to_string(cfg.embedding.method)));
        } catch (const ConfigError& e) {
            fail("embedding.method", e.what());
        }
        cfg.embedding.k = get_index(*embed, "embedding", "k", cfg.embedding.k);
        if (cfg.embedding.k < 1) fail("embedding.k", "must be >= 1");
        const std::string split = get_str(*embed, "embedding", "split", "test");
        if (split == "train") {
            cfg.embedding.split = EmbedSplit::train;
        } else if (split == "test") {
            cfg.embedding.split = EmbedSplit::test;
        } else if (split == "all") {
            cfg.embedding.split = EmbedSplit::all;
        } else {
            fail("embedding.split", "expected 'train', 'test', or 'all'");
        }
        if (const json* bw = find(*embed, "bandwidth")) {
            if (!bw->is_number() || bw->get<double>() <= 0.0) {
                fail("embedding.bandwidth", "must be a positive number");
            }
            cfg.embedding.bandwidth = bw->get<double>();
        }
    }

    if (const json* tm = find(j, "two_modalities")) {
        if (!tm->is_object()) fail("two_modalities", "expected an object");
        cfg.tm_T = get_index(*tm, "two_modalities", "T", cfg.tm_T);
        cfg.tm_omega_min = get_num(*tm, "two_modalities", "omega_min", cfg.tm_omega_min);
        cfg.tm_omega_max = get_num(*tm, "two_modalities", "omega_max", cfg.tm_omega_max);
        cfg.tm_base_image = get_str(*tm, "two_modalities", "base_image", cfg.tm_base_image);
    }
    if (cfg.tm_T < 2) fail("two_modalities.T", "must be >= 2");
    if (!(cfg.tm_omega_min > 0.0 && cfg.tm_omega_min <= cfg.tm_omega_max)) {
        fail("two_modalities.omega_min", "need 0 < omega_min <= omega_max");
    }
    if (!(cfg.tm_omega_max < 0.5)) {
        fail("two_modalities.omega_max", "must be below the Nyquist rate 0.5");
    }

    if (const json* rot = find(j, "rotation")) {
        if (!rot->is_object()) fail("rotation", "expected an object");
        cfg.rot_corpus_size = get_index(*rot, "rotation", "corpus_size", cfg.rot_corpus_size);
        cfg.rot_images_dir = get_str(*rot, "rotation", "images_dir", cfg.rot_images_dir);
        cfg.rot_trials = get_index(*rot, "rotation", "trials", cfg.rot_trials);
    }
    if (cfg.rot_corpus_size < 2) fail("rotation.corpus_size", "must be >= 2");
    if (cfg.rot_trials < 1) fail("rotation.trials", "must be >= 1");

    cfg.out_dir = get_str(j, "", "out_dir", cfg.out_dir);

    // Cross-field consistency: the branch input dims are implied by the
    // experiment, so only the shared output dim needs checking (done above).
    return cfg;
}

ExperimentConfig load_config_file(const std::string& path,
                                  std::optional<std::uint64_t> seed_override) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError("invalid JSON in '" + path + "': " + std::string(e.what()));
    }
    return parse_config(j, seed_override);
}

json effective_config(const ExperimentConfig& cfg) {
    json net1{{"hidden", cfg.net1.hidden},
              {"output", cfg.net1.output},
              {"hidden_activation", to_string(cfg.net1.hidden_activation)},
              {"output_activation", to_string(cfg.net1.output_activation)}};
    json net2{{"hidden", cfg.net2.hidden},
              {"output", cfg.net2.output},
              {"hidden_activation", to_string(cfg.net2.hidden_activation)},
              {"output_activation", to_string(cfg.net2.output_activation)}};
    json j{{"experiment", to_string(cfg.experiment)},
           {"seed", cfg.seed},
           {"n_pairs", cfg.n_pairs},
           {"test_fraction", cfg.test_fraction},
           {"net1", std::move(net1)},
           {"net2", std::move(net2)},
           {"output_init_scale", cfg.output_init_scale},
           {"pretrain",
            {{"enabled", cfg.pretrain_enabled},
             {"corruption_probability", cfg.dae.corruption_probability},
             {"sparsity_target", cfg.dae.sparsity_target},
             {"sparsity_weight", cfg.dae.sparsity_weight},
             {"epochs", cfg.dae.epochs},
             {"learning_rate", cfg.dae.learning_rate},
             {"batch_size", cfg.dae.batch_size}}},
           {"train",
            {{"alpha", cfg.train.loss.alpha},
             {"beta", cfg.train.loss.beta},
             {"lambda", cfg.train.loss.lambda},
             {"optimizer",
              cfg.train.optimizer == Optimizer::sgd_momentum ? "sgd_momentum" : "lbfgs"},
             {"sgd",
              {{"learning_rate", cfg.train.sgd.learning_rate},
               {"momentum", cfg.train.sgd.momentum},
               {"batch_size", cfg.train.sgd.batch_size},
               {"epochs", cfg.train.sgd.epochs},
               {"keep_probability", cfg.train.sgd.keep_probability}}},
             {"lbfgs",
              {{"history", cfg.train.lbfgs.history},
               {"max_iters", cfg.train.lbfgs.max_iters},
               {"c1", cfg.train.lbfgs.c1},
               {"backtrack", cfg.train.lbfgs.backtrack},
               {"grad_tol", cfg.train.lbfgs.grad_tol}}}}},
           {"embedding",
            {{"method", to_string(cfg.embedding.method)},
             {"k", cfg.embedding.k},
             {"split", cfg.embedding.split == EmbedSplit::train
                           ? "train"
                           : (cfg.embedding.split == EmbedSplit::test ? "test" : "all")}}},
           {"two_modalities",
            {{"T", cfg.tm_T},
             {"omega_min", cfg.tm_omega_min},
             {"omega_max", cfg.tm_omega_max},
             {"base_image", cfg.tm_base_image}}},
           {"rotation",
            {{"corpus_size", cfg.rot_corpus_size},
             {"images_dir", cfg.rot_images_dir},
             {"trials", cfg.rot_trials}}},
           {"out_dir", cfg.out_dir}};
    if (cfg.embedding.bandwidth.has_value()) {
        j["embedding"]["bandwidth"] = *cfg.embedding.bandwidth;
    }
    return j;
}

} // namespace covar
