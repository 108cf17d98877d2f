// Pipeline commands behind the `covar` executable. Each command reads its
// inputs from, and writes its outputs into, the configured output directory:
//   generate  -> pos.bin, neg.bin, manifest.json
//   train     -> model.json, loss.csv
//   embed     -> embedding.csv
//   evaluate  -> report.json, report.csv
#pragma once

#include <string>

#include "covar/config.hpp"

namespace covar {

struct OutPaths {
    explicit OutPaths(const std::string& dir);
    std::string dir;
    std::string pos;
    std::string neg;
    std::string manifest;
    std::string model;
    std::string loss_csv;
    std::string embedding_csv;
    std::string report_json;
    std::string report_csv;
};

void cmd_generate(const ExperimentConfig& cfg);
void cmd_train(const ExperimentConfig& cfg);
void cmd_embed(const ExperimentConfig& cfg);
void cmd_evaluate(const ExperimentConfig& cfg);

/// Parses arguments, dispatches, and maps failures to exit codes:
/// 0 ok, 2 configuration error, 3 data error, 4 numeric abort. Failures
/// print one machine-parseable JSON line to stderr.
int run_cli(int argc, char** argv);

} // namespace covar
