#include "covar/cli.hpp"

#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "covar/embedding.hpp"
#include "covar/error.hpp"
#include "covar/eval.hpp"
#include "covar/io.hpp"
#include "covar/numeric.hpp"
#include "covar/pairing.hpp"
#include "covar/pretrain.hpp"
#include "covar/siamese.hpp"
#include "covar/synthdata.hpp"

namespace covar {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Child-stream tags off the root seed. Commands that must agree (train,
// embed, evaluate re-derive the same split) use the same tag.
constexpr std::uint64_t kStreamData = 1;
constexpr std::uint64_t kStreamNegatives = 2;
constexpr std::uint64_t kStreamCorpus = 3;
constexpr std::uint64_t kStreamSplit = 4;
constexpr std::uint64_t kStreamInit = 5;
constexpr std::uint64_t kStreamPretrain = 6;
constexpr std::uint64_t kStreamTrain = 7;
constexpr std::uint64_t kStreamEval = 8;

std::string fmt_double(double v) {
    char buf[40];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

std::vector<ImageGray> rotation_corpus(const ExperimentConfig& cfg) {
    if (!cfg.rot_images_dir.empty()) {
        return load_image_directory(cfg.rot_images_dir);
    }
    RngStream corpus_rng = RngStream(cfg.seed).split(kStreamCorpus);
    return blob_corpus(cfg.rot_corpus_size, corpus_rng);
}

ImageGray two_modalities_base(const ExperimentConfig& cfg) {
    if (!cfg.tm_base_image.empty()) {
        return load_pgm(cfg.tm_base_image);
    }
    RngStream corpus_rng = RngStream(cfg.seed).split(kStreamCorpus);
    return blob_corpus(1, corpus_rng).front();
}

SplitResult derive_split(const ExperimentConfig& cfg, const PairedDataset& pos,
                         const PairedDataset& neg) {
    RngStream split_rng = RngStream(cfg.seed).split(kStreamSplit);
    const NegativeSplitPolicy policy = cfg.experiment == Experiment::rotation_invariance
                                           ? NegativeSplitPolicy::row_split
                                           : NegativeSplitPolicy::remix;
    return split_dataset(pos, neg, cfg.test_fraction, split_rng, policy);
}

JointNetwork init_networks(const ExperimentConfig& cfg) {
    const auto [d1, d2] = cfg.input_dims();
    RngStream rng = RngStream(cfg.seed).split(kStreamInit);
    JointNetwork jn;
    jn.net1 = init_weights(d1, cfg.net1.layer_specs(), rng);
    jn.net2 = init_weights(d2, cfg.net2.layer_specs(), rng);
    scale_output_layer(jn.net1, cfg.output_init_scale);
    scale_output_layer(jn.net2, cfg.output_init_scale);
    return jn;
}

void check_dataset_dims(const ExperimentConfig& cfg, const PairedDataset& pos,
                        const PairedDataset& neg) {
    const auto [d1, d2] = cfg.input_dims();
    if (pos.s1.cols() != d1 || pos.s2.cols() != d2) {
        throw DataError("dataset dims (" + std::to_string(pos.s1.cols()) + ", " +
                        std::to_string(pos.s2.cols()) + ") do not match experiment dims (" +
                        std::to_string(d1) + ", " + std::to_string(d2) + ")");
    }
    if (neg.s1.cols() != d1 || neg.s2.cols() != d2) {
        throw DataError("negative dataset dims do not match experiment dims");
    }
    if (pos.label != PairLabel::positive || neg.label != PairLabel::negative) {
        throw DataError("dataset files have unexpected labels (pos/neg swapped?)");
    }
}

json eval_report_to_json(const EvalReport& report) {
    json j{{"accuracy", report.accuracy},
           {"n_test_pos", report.n_test_pos},
           {"n_test_neg", report.n_test_neg},
           {"mean_pos_score", report.mean_pos_score},
           {"mean_neg_score", report.mean_neg_score}};
    if (report.invariance.has_value()) {
        j["invariance"] = {{"median_same", report.invariance->median_same},
                           {"median_diff", report.invariance->median_diff},
                           {"separation_auc", report.invariance->separation_auc},
                           {"trials", report.invariance->trials}};
    }
    if (report.recovery.has_value()) {
        j["recovery"] = {{"circular_correlation", report.recovery->circular_correlation}};
    }
    return j;
}

EmbeddingResult run_embedding(const ExperimentConfig& cfg, const MatX& points, Index k) {
    if (cfg.embedding.method == EmbeddingMethod::pca) {
        return pca(points, k);
    }
    return diffusion_maps(points, k, cfg.embedding.bandwidth);
}

} // namespace

OutPaths::OutPaths(const std::string& d)
    : dir(d),
      pos((fs::path(d) / "pos.bin").string()),
      neg((fs::path(d) / "neg.bin").string()),
      manifest((fs::path(d) / "manifest.json").string()),
      model((fs::path(d) / "model.json").string()),
      loss_csv((fs::path(d) / "loss.csv").string()),
      embedding_csv((fs::path(d) / "embedding.csv").string()),
      report_json((fs::path(d) / "report.json").string()),
      report_csv((fs::path(d) / "report.csv").string()) {}

void cmd_generate(const ExperimentConfig& cfg) {
    const OutPaths paths(cfg.out_dir);
    fs::create_directories(cfg.out_dir);

    RngStream data_rng = RngStream(cfg.seed).split(kStreamData);
    PairedDataset pos, neg;
    switch (cfg.experiment) {
        case Experiment::spinning_sprites: {
            pos = gen_spinning_sprites(cfg.n_pairs, data_rng);
            RngStream neg_rng = RngStream(cfg.seed).split(kStreamNegatives);
            neg = make_negatives(pos, neg_rng);
            break;
        }
        case Experiment::two_modalities: {
            const ImageGray base = two_modalities_base(cfg);
            pos = gen_two_modalities(cfg.n_pairs, base, cfg.tm_T, cfg.tm_omega_min,
                                     cfg.tm_omega_max, data_rng);
            RngStream neg_rng = RngStream(cfg.seed).split(kStreamNegatives);
            neg = make_negatives(pos, neg_rng);
            break;
        }
        case Experiment::rotation_invariance: {
            const std::vector<ImageGray> corpus = rotation_corpus(cfg);
            std::tie(pos, neg) = gen_rotation_pairs(cfg.n_pairs, corpus, data_rng);
            break;
        }
    }

    write_dataset(paths.pos, pos);
    write_dataset(paths.neg, neg);

    json manifest{{"command", "generate"},
                  {"experiment", to_string(cfg.experiment)},
                  {"n", pos.n()},
                  {"d1", pos.s1.cols()},
                  {"d2", pos.s2.cols()},
                  {"files", {{"pos", "pos.bin"}, {"neg", "neg.bin"}}},
                  {"config", effective_config(cfg)}};
    write_text_atomic(paths.manifest, manifest.dump(2) + "\n");

    std::cout << "wrote " << paths.pos << " and " << paths.neg << " (n=" << pos.n()
              << ", d1=" << pos.s1.cols() << ", d2=" << pos.s2.cols() << ")\n";
}

void cmd_train(const ExperimentConfig& cfg) {
    const OutPaths paths(cfg.out_dir);

    SplitResult split;
    {
        const PairedDataset pos = read_dataset(paths.pos);
        const PairedDataset neg = read_dataset(paths.neg);
        check_dataset_dims(cfg, pos, neg);
        split = derive_split(cfg, pos, neg);
    } // full datasets released before training

    const Standardizer std1 = Standardizer::fit(split.train_pos.s1);
    const Standardizer std2 = Standardizer::fit(split.train_pos.s2);
    std1.apply_in_place(split.train_pos.s1);
    std2.apply_in_place(split.train_pos.s2);
    std1.apply_in_place(split.train_neg.s1);
    std2.apply_in_place(split.train_neg.s2);

    JointNetwork jn = init_networks(cfg);
    if (cfg.pretrain_enabled && cfg.dae.epochs > 0) {
        RngStream pre = RngStream(cfg.seed).split(kStreamPretrain);
        DaeConfig dae1 = cfg.dae;
        dae1.seed = pre.split(1).seed();
        jn.net1 = pretrain_stack(std::move(jn.net1), split.train_pos.s1, dae1);
        DaeConfig dae2 = cfg.dae;
        dae2.seed = pre.split(2).seed();
        jn.net2 = pretrain_stack(std::move(jn.net2), split.train_pos.s2, dae2);
    }

    TrainConfig train_cfg = cfg.train;
    train_cfg.seed = RngStream(cfg.seed).split(kStreamTrain).seed();
    TrainResult result;
    if (cfg.train.optimizer == Optimizer::sgd_momentum) {
        result = train_sgd(std::move(jn), split.train_pos.s1, split.train_pos.s2,
                           split.train_neg.s1, split.train_neg.s2, train_cfg);
    } else {
        result = train_lbfgs(std::move(jn), split.train_pos.s1, split.train_pos.s2,
                             split.train_neg.s1, split.train_neg.s2, train_cfg);
        if (result.line_search_warning) {
            std::cout << "warning: line search stalled; keeping the current iterate\n";
        }
    }

    SavedModel model{std::move(result.net), std1, std2, to_string(cfg.experiment)};
    save_model(paths.model, model);

    std::string csv = "epoch,loss\n";
    for (std::size_t i = 0; i < result.trajectory.size(); ++i) {
        csv += std::to_string(i + 1) + "," + fmt_double(result.trajectory[i]) + "\n";
    }
    write_text_atomic(paths.loss_csv, csv);

    std::cout << "wrote " << paths.model << " and " << paths.loss_csv << " ("
              << result.trajectory.size() << " epochs";
    if (!result.trajectory.empty()) {
        std::cout << ", final loss " << fmt_double(result.trajectory.back());
    }
    std::cout << ")\n";
}

void cmd_embed(const ExperimentConfig& cfg) {
    const OutPaths paths(cfg.out_dir);
    const SavedModel model = load_model(paths.model);

    PairedDataset subset;
    {
        PairedDataset pos = read_dataset(paths.pos);
        if (cfg.embedding.split == EmbedSplit::all) {
            subset = std::move(pos);
        } else {
            const PairedDataset neg = read_dataset(paths.neg);
            check_dataset_dims(cfg, pos, neg);
            SplitResult split = derive_split(cfg, pos, neg);
            subset = cfg.embedding.split == EmbedSplit::train ? std::move(split.train_pos)
                                                              : std::move(split.test_pos);
        }
    }
    if (subset.s1.cols() != model.net.net1.input_dim() ||
        subset.s2.cols() != model.net.net2.input_dim()) {
        throw DataError("embed: dataset dims do not match the model");
    }

    const MatX out1 = forward(model.net.net1, model.input1.apply(subset.s1)).output();
    const MatX out2 = forward(model.net.net2, model.input2.apply(subset.s2)).output();
    MatX pooled(out1.rows() + out2.rows(), out1.cols());
    pooled.topRows(out1.rows()) = out1;
    pooled.bottomRows(out2.rows()) = out2;

    const EmbeddingResult emb = run_embedding(cfg, pooled, cfg.embedding.k);

    const bool with_hidden = subset.has_hidden_x();
    std::string csv = "sensor";
    for (Index c = 0; c < emb.coordinates.cols(); ++c) {
        csv += ",coord" + std::to_string(c + 1);
    }
    if (with_hidden) csv += ",hidden_x";
    csv += "\n";
    const Index n = subset.n();
    for (Index r = 0; r < emb.coordinates.rows(); ++r) {
        csv += r < n ? "1" : "2";
        for (Index c = 0; c < emb.coordinates.cols(); ++c) {
            csv += "," + fmt_double(emb.coordinates(r, c));
        }
        if (with_hidden) csv += "," + fmt_double(subset.hidden_x[r % n]);
        csv += "\n";
    }
    write_text_atomic(paths.embedding_csv, csv);

    std::cout << "wrote " << paths.embedding_csv << " (" << emb.coordinates.rows() << " rows, k="
              << emb.coordinates.cols() << ")\n";
}

void cmd_evaluate(const ExperimentConfig& cfg) {
    const OutPaths paths(cfg.out_dir);
    const SavedModel model = load_model(paths.model);

    SplitResult split;
    {
        const PairedDataset pos = read_dataset(paths.pos);
        const PairedDataset neg = read_dataset(paths.neg);
        check_dataset_dims(cfg, pos, neg);
        split = derive_split(cfg, pos, neg);
    }
    model.input1.apply_in_place(split.train_pos.s1);
    model.input2.apply_in_place(split.train_pos.s2);
    model.input1.apply_in_place(split.train_neg.s1);
    model.input2.apply_in_place(split.train_neg.s2);
    model.input1.apply_in_place(split.test_pos.s1);
    model.input2.apply_in_place(split.test_pos.s2);
    model.input1.apply_in_place(split.test_neg.s1);
    model.input2.apply_in_place(split.test_neg.s2);

    EvalReport test_report = pair_accuracy(model.net, split.test_pos, split.test_neg);
    const EvalReport train_report = pair_accuracy(model.net, split.train_pos, split.train_neg);

    // Untrained baseline: the seeded initialization evaluated on the same
    // standardized test split, showing what the architecture alone scores.
    const JointNetwork untrained = init_networks(cfg);
    const EvalReport baseline = pair_accuracy(untrained, split.test_pos, split.test_neg);

    if (cfg.experiment == Experiment::rotation_invariance) {
        const std::vector<ImageGray> corpus = rotation_corpus(cfg);
        RngStream eval_rng = RngStream(cfg.seed).split(kStreamEval);
        test_report.invariance = invariance_histograms(model.net.net1, corpus, cfg.rot_trials,
                                                       eval_rng, &model.input1);
    }
    if (cfg.experiment == Experiment::spinning_sprites && split.test_pos.has_hidden_x()) {
        // Angle recovery: 2-D embedding of the pooled branch outputs on the
        // test split, compared against the hidden common angle.
        const MatX out1 = forward(model.net.net1, split.test_pos.s1).output();
        const MatX out2 = forward(model.net.net2, split.test_pos.s2).output();
        MatX pooled(out1.rows() + out2.rows(), out1.cols());
        pooled.topRows(out1.rows()) = out1;
        pooled.bottomRows(out2.rows()) = out2;
        const EmbeddingResult emb = run_embedding(cfg, pooled, 2);
        VecX recovered(emb.coordinates.rows());
        for (Index i = 0; i < recovered.size(); ++i) {
            recovered[i] = std::atan2(emb.coordinates(i, 1), emb.coordinates(i, 0));
        }
        VecX truth(recovered.size());
        const Index n = split.test_pos.n();
        for (Index i = 0; i < truth.size(); ++i) truth[i] = split.test_pos.hidden_x[i % n];
        test_report.recovery = Recovery{circular_correlation(recovered, truth)};
    }

    json report{{"experiment", to_string(cfg.experiment)},
                {"test", eval_report_to_json(test_report)},
                {"train", eval_report_to_json(train_report)},
                {"untrained_baseline", {{"accuracy", baseline.accuracy}}}};
    write_text_atomic(paths.report_json, report.dump(2) + "\n");

    std::string csv = "split,metric,value\n";
    auto add_rows = [&csv](const std::string& split_name, const EvalReport& r) {
        csv += split_name + ",accuracy," + fmt_double(r.accuracy) + "\n";
        csv += split_name + ",mean_pos_score," + fmt_double(r.mean_pos_score) + "\n";
        csv += split_name + ",mean_neg_score," + fmt_double(r.mean_neg_score) + "\n";
        if (r.invariance.has_value()) {
            csv += split_name + ",median_same," + fmt_double(r.invariance->median_same) + "\n";
            csv += split_name + ",median_diff," + fmt_double(r.invariance->median_diff) + "\n";
            csv += split_name + ",separation_auc," + fmt_double(r.invariance->separation_auc) + "\n";
        }
        if (r.recovery.has_value()) {
            csv += split_name + ",circular_correlation," +
                   fmt_double(r.recovery->circular_correlation) + "\n";
        }
    };
    add_rows("test", test_report);
    add_rows("train", train_report);
    csv += "baseline,accuracy," + fmt_double(baseline.accuracy) + "\n";
    write_text_atomic(paths.report_csv, csv);

    std::cout << "wrote " << paths.report_json << " (test accuracy "
              << fmt_double(test_report.accuracy) << ", baseline "
              << fmt_double(baseline.accuracy) << ")\n";
}

namespace {

void error_line(int exit_code, const char* kind, const std::string& message) {
    json j{{"error", {{"exit_code", exit_code}, {"kind", kind}, {"message", message}}}};
    std::cerr << j.dump() << "\n";
}

std::optional<std::uint64_t> seed_from_env() {
    const char* env = std::getenv("CVL_SEED");
    if (env == nullptr || *env == '\0') return std::nullopt;
    std::uint64_t value = 0;
    const char* end = env + std::string(env).size();
    auto [ptr, ec] = std::from_chars(env, end, value);
    if (ec != std::errc() || ptr != end) {
        throw ConfigError("CVL_SEED: expected a non-negative integer, got '" + std::string(env) +
                          "'");
    }
    return value;
}

} // namespace

int run_cli(int argc, char** argv) {
    CLI::App app{"common-variable learning from synchronized sensor pairs"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_override;
    const char* descriptions[4][2] = {
        {"generate", "generate positive/negative datasets"},
        {"train", "train the two-branch network"},
        {"embed", "embed branch outputs and reduce dimensionality"},
        {"evaluate", "score pair classification and write a report"},
    };
    for (auto& [name, desc] : descriptions) {
        CLI::App* sub = app.add_subcommand(name, desc);
        sub->add_option("--config", config_path, "path to the JSON configuration")->required();
        sub->add_option("--out", out_override, "output directory (overrides config out_dir)");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        error_line(2, "config", e.what());
        return 2;
    }

    try {
        ExperimentConfig cfg = load_config_file(config_path, seed_from_env());
        if (!out_override.empty()) cfg.out_dir = out_override;

        const std::string command = app.get_subcommands().front()->get_name();
        if (command == "generate") {
            cmd_generate(cfg);
        } else if (command == "train") {
            cmd_train(cfg);
        } else if (command == "embed") {
            cmd_embed(cfg);
        } else {
            cmd_evaluate(cfg);
        }
        return 0;
    } catch (const ConfigError& e) {
        error_line(2, "config", e.what());
        return 2;
    } catch (const NumericError& e) {
        error_line(4, "numeric", e.what());
        return 4;
    } catch (const DataError& e) {
        error_line(3, "data", e.what());
        return 3;
    } catch (const std::exception& e) {
        error_line(3, "data", e.what());
        return 3;
    }
}

} // namespace covar
