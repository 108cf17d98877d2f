#include "covar/io.hpp"

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <vector>

#include <json.hpp>

#include "covar/error.hpp"
#include "covar/numeric.hpp"

namespace covar {

namespace {

static_assert(std::endian::native == std::endian::little,
              "dataset serialization assumes a little-endian host");

constexpr char kMagic[4] = {'C', 'V', 'L', '1'};
constexpr std::uint16_t kVersion = 1;
constexpr std::uint16_t kFlagHiddenX = 1u << 0;
constexpr std::uint16_t kFlagHiddenYZ = 1u << 1;
constexpr std::uint16_t kFlagNegative = 1u << 2;

template <class T>
void put(std::ostream& out, T value) {
    out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <class T>
T get(std::istream& in, const std::string& path) {
    T value{};
    in.read(reinterpret_cast<char*>(&value), sizeof(T));
    if (in.gcount() != sizeof(T)) {
        throw DataError("read_dataset: truncated file '" + path + "'");
    }
    return value;
}

void put_matrix_f32(std::ostream& out, const MatX& m) {
    std::vector<float> row(static_cast<std::size_t>(m.cols()));
    for (Index r = 0; r < m.rows(); ++r) {
        for (Index c = 0; c < m.cols(); ++c) {
            row[static_cast<std::size_t>(c)] = static_cast<float>(m(r, c));
        }
        out.write(reinterpret_cast<const char*>(row.data()),
                  static_cast<std::streamsize>(row.size() * sizeof(float)));
    }
}

MatX get_matrix_f32(std::istream& in, Index rows, Index cols, const std::string& path) {
    MatX m(rows, cols);
    std::vector<float> row(static_cast<std::size_t>(cols));
    for (Index r = 0; r < rows; ++r) {
        in.read(reinterpret_cast<char*>(row.data()),
                static_cast<std::streamsize>(row.size() * sizeof(float)));
        if (in.gcount() != static_cast<std::streamsize>(row.size() * sizeof(float))) {
            throw DataError("read_dataset: truncated sensor block in '" + path + "'");
        }
        for (Index c = 0; c < cols; ++c) m(r, c) = row[static_cast<std::size_t>(c)];
    }
    return m;
}

void put_vector_f64(std::ostream& out, const VecX& v) {
    out.write(reinterpret_cast<const char*>(v.data()),
              static_cast<std::streamsize>(static_cast<std::size_t>(v.size()) * sizeof(double)));
}

VecX get_vector_f64(std::istream& in, Index n, const std::string& path) {
    VecX v(n);
    in.read(reinterpret_cast<char*>(v.data()),
            static_cast<std::streamsize>(static_cast<std::size_t>(n) * sizeof(double)));
    if (in.gcount() != static_cast<std::streamsize>(static_cast<std::size_t>(n) * sizeof(double))) {
        throw DataError("read_dataset: truncated hidden block in '" + path + "'");
    }
    return v;
}

std::filesystem::path temp_sibling(const std::string& path) {
    return std::filesystem::path(path).concat(".tmp");
}

} // namespace

void write_dataset(const std::string& path, const PairedDataset& data) {
    require_finite(data.s1, "write_dataset: s1");
    require_finite(data.s2, "write_dataset: s2");
    const bool has_x = data.hidden_x.size() == data.n() && data.n() > 0;
    const bool has_yz = has_x && data.hidden_y.size() == data.n() && data.hidden_z.size() == data.n();

    const auto tmp = temp_sibling(path);
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw DataError("write_dataset: cannot open '" + path + "' for writing");

        out.write(kMagic, sizeof(kMagic));
        put<std::uint16_t>(out, kVersion);
        std::uint16_t flags = 0;
        if (has_x) flags |= kFlagHiddenX;
        if (has_yz) flags |= kFlagHiddenYZ;
        if (data.label == PairLabel::negative) flags |= kFlagNegative;
        put<std::uint16_t>(out, flags);
        put<std::uint64_t>(out, static_cast<std::uint64_t>(data.n()));
        put<std::uint32_t>(out, static_cast<std::uint32_t>(data.s1.cols()));
        put<std::uint32_t>(out, static_cast<std::uint32_t>(data.s2.cols()));
        put_matrix_f32(out, data.s1);
        put_matrix_f32(out, data.s2);
        if (has_x) put_vector_f64(out, data.hidden_x);
        if (has_yz) {
            put_vector_f64(out, data.hidden_y);
            put_vector_f64(out, data.hidden_z);
        }
        if (!out) throw DataError("write_dataset: write failed for '" + path + "'");
    }
    std::filesystem::rename(tmp, path);
}

PairedDataset read_dataset(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("read_dataset: cannot open '" + path + "'");

    char magic[4] = {};
    in.read(magic, sizeof(magic));
    if (in.gcount() != sizeof(magic) || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
        throw DataError("read_dataset: '" + path + "' is not a CVL1 dataset");
    }
    const auto version = get<std::uint16_t>(in, path);
    if (version != kVersion) {
        throw DataError("read_dataset: unsupported version " + std::to_string(version) + " in '" +
                        path + "'");
    }
    const auto flags = get<std::uint16_t>(in, path);
    const auto n = static_cast<Index>(get<std::uint64_t>(in, path));
    const auto d1 = static_cast<Index>(get<std::uint32_t>(in, path));
    const auto d2 = static_cast<Index>(get<std::uint32_t>(in, path));

    PairedDataset data;
    data.label = (flags & kFlagNegative) != 0 ? PairLabel::negative : PairLabel::positive;
    data.s1 = get_matrix_f32(in, n, d1, path);
    data.s2 = get_matrix_f32(in, n, d2, path);
    if ((flags & kFlagHiddenX) != 0) data.hidden_x = get_vector_f64(in, n, path);
    if ((flags & kFlagHiddenYZ) != 0) {
        data.hidden_y = get_vector_f64(in, n, path);
        data.hidden_z = get_vector_f64(in, n, path);
    }
    require_finite(data.s1, "read_dataset: s1");
    require_finite(data.s2, "read_dataset: s2");
    return data;
}

namespace {

using nlohmann::json;

json layer_to_json(const LayerParams& layer) {
    json jw = json::array();
    for (Index r = 0; r < layer.weights.rows(); ++r) {
        json row = json::array();
        for (Index c = 0; c < layer.weights.cols(); ++c) row.push_back(layer.weights(r, c));
        jw.push_back(std::move(row));
    }
    json jb = json::array();
    for (Index i = 0; i < layer.biases.size(); ++i) jb.push_back(layer.biases[i]);
    return json{{"activation", to_string(layer.activation)},
                {"weights", std::move(jw)},
                {"biases", std::move(jb)}};
}

LayerParams layer_from_json(const json& j) {
    LayerParams layer;
    layer.activation = activation_from_string(j.at("activation").get<std::string>());
    const json& jw = j.at("weights");
    const auto rows = static_cast<Index>(jw.size());
    if (rows == 0) throw DataError("model file: empty weight matrix");
    const auto cols = static_cast<Index>(jw.at(0).size());
    layer.weights.resize(rows, cols);
    for (Index r = 0; r < rows; ++r) {
        const json& row = jw.at(static_cast<std::size_t>(r));
        if (static_cast<Index>(row.size()) != cols) {
            throw DataError("model file: ragged weight matrix");
        }
        for (Index c = 0; c < cols; ++c) {
            layer.weights(r, c) = row.at(static_cast<std::size_t>(c)).get<double>();
        }
    }
    const json& jb = j.at("biases");
    layer.biases.resize(static_cast<Index>(jb.size()));
    for (Index i = 0; i < layer.biases.size(); ++i) {
        layer.biases[i] = jb.at(static_cast<std::size_t>(i)).get<double>();
    }
    if (layer.biases.size() != layer.weights.rows()) {
        throw DataError("model file: bias length does not match weight rows");
    }
    return layer;
}

json net_to_json(const SubNetwork& net) {
    json layers = json::array();
    for (const LayerParams& layer : net.layers) layers.push_back(layer_to_json(layer));
    return json{{"input_dim", net.input_dim()}, {"layers", std::move(layers)}};
}

SubNetwork net_from_json(const json& j) {
    SubNetwork net;
    for (const json& layer : j.at("layers")) net.layers.push_back(layer_from_json(layer));
    if (net.layers.empty()) throw DataError("model file: network has no layers");
    Index in_dim = j.at("input_dim").get<Index>();
    for (const LayerParams& layer : net.layers) {
        if (layer.in_dim() != in_dim) throw DataError("model file: layer dims do not chain");
        in_dim = layer.out_dim();
    }
    return net;
}

json standardizer_to_json(const Standardizer& s) {
    json mean = json::array();
    json stddev = json::array();
    for (Index i = 0; i < s.mean.size(); ++i) {
        mean.push_back(s.mean[i]);
        stddev.push_back(s.stddev[i]);
    }
    return json{{"mean", std::move(mean)}, {"stddev", std::move(stddev)}};
}

Standardizer standardizer_from_json(const json& j) {
    Standardizer s;
    const json& mean = j.at("mean");
    const json& stddev = j.at("stddev");
    if (mean.size() != stddev.size()) throw DataError("model file: standardizer length mismatch");
    s.mean.resize(static_cast<Index>(mean.size()));
    s.stddev.resize(static_cast<Index>(stddev.size()));
    for (Index i = 0; i < s.mean.size(); ++i) {
        s.mean[i] = mean.at(static_cast<std::size_t>(i)).get<double>();
        s.stddev[i] = stddev.at(static_cast<std::size_t>(i)).get<double>();
    }
    return s;
}

} // namespace

void save_model(const std::string& path, const SavedModel& model) {
    json j{{"format", "covar-model"},
           {"version", 1},
           {"experiment", model.experiment},
           {"net1", net_to_json(model.net.net1)},
           {"net2", net_to_json(model.net.net2)},
           {"standardize1", standardizer_to_json(model.input1)},
           {"standardize2", standardizer_to_json(model.input2)}};
    write_text_atomic(path, j.dump());
}

SavedModel load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("load_model: cannot open '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw DataError("load_model: invalid JSON in '" + path + "': " + e.what());
    }
    try {
        if (j.at("format").get<std::string>() != "covar-model") {
            throw DataError("load_model: '" + path + "' is not a model file");
        }
        SavedModel model;
        model.experiment = j.value("experiment", "");
        model.net.net1 = net_from_json(j.at("net1"));
        model.net.net2 = net_from_json(j.at("net2"));
        model.input1 = standardizer_from_json(j.at("standardize1"));
        model.input2 = standardizer_from_json(j.at("standardize2"));
        if (model.net.net1.output_dim() != model.net.net2.output_dim()) {
            throw DataError("load_model: branch output dims differ");
        }
        return model;
    } catch (const json::exception& e) {
        throw DataError("load_model: malformed model '" + path + "': " + e.what());
    }
}

void write_text_atomic(const std::string& path, const std::string& content) {
    const auto tmp = temp_sibling(path);
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw DataError("cannot open '" + path + "' for writing");
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) throw DataError("write failed for '" + path + "'");
    }
    std::filesystem::rename(tmp, path);
}

} // namespace covar
