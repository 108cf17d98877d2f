// File formats and atomic persistence.
//
// Dataset files ("CVL1"): little-endian binary, magic "CVL1", u16 version,
// u16 flags (bit0 hidden_x present, bit1 hidden_y and hidden_z present,
// bit2 label is negative), u64 n, u32 d1, u32 d2, then n*d1 float32 sensor-1
// rows, n*d2 float32 sensor-2 rows, then the optional hidden blocks as
// float64 (hidden_x, then hidden_y and hidden_z). hidden_x2 is an in-memory
// evaluation aid and is not persisted.
//
// Model files: JSON with layer shapes, activation names, standardization
// vectors, and all parameters as decimal numbers that parse back to the
// identical doubles.
#pragma once

#include <string>

#include "covar/pairing.hpp"
#include "covar/siamese.hpp"
#include "covar/standardize.hpp"

namespace covar {

void write_dataset(const std::string& path, const PairedDataset& data);
PairedDataset read_dataset(const std::string& path);

struct SavedModel {
    JointNetwork net;
    Standardizer input1;
    Standardizer input2;
    std::string experiment;
};

void save_model(const std::string& path, const SavedModel& model);
SavedModel load_model(const std::string& path);

/// Writes via a temporary file in the same directory, then renames.
void write_text_atomic(const std::string& path, const std::string& content);

} // namespace covar
