#include "covar/synthdata.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "covar/error.hpp"

namespace covar {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double sample_bilinear(const ImageGray& img, double sr, double sc) {
    const auto r0 = static_cast<Index>(std::floor(sr));
    const auto c0 = static_cast<Index>(std::floor(sc));
    const double fr = sr - static_cast<double>(r0);
    const double fc = sc - static_cast<double>(c0);
    auto at = [&](Index r, Index c) -> double {
        if (r < 0 || r >= img.rows() || c < 0 || c >= img.cols()) return 0.0;
        return img(r, c);
    };
    return (1.0 - fr) * (1.0 - fc) * at(r0, c0) + (1.0 - fr) * fc * at(r0, c0 + 1) +
           fr * (1.0 - fc) * at(r0 + 1, c0) + fr * fc * at(r0 + 1, c0 + 1);
}

} // namespace

ImageGray rotate_image(const ImageGray& img, double theta) {
    if (!std::isfinite(theta)) {
        throw ConfigError("rotate_image: angle must be finite");
    }
    const Index h = img.rows();
    const Index w = img.cols();
    const double cy = static_cast<double>(h - 1) / 2.0;
    const double cx = static_cast<double>(w - 1) / 2.0;
    const double ct = std::cos(theta);
    const double st = std::sin(theta);
    ImageGray out(h, w);
    for (Index r = 0; r < h; ++r) {
        const double v = static_cast<double>(r) - cy;
        for (Index c = 0; c < w; ++c) {
            const double u = static_cast<double>(c) - cx;
            const double sc = cx + u * ct - v * st;
            const double sr = cy + u * st + v * ct;
            out(r, c) = sample_bilinear(img, sr, sc);
        }
    }
    return out;
}

MatX flatten_image(const ImageGray& img) {
    MatX row(1, img.size());
    row = Eigen::Map<const MatX>(img.data(), 1, img.size());
    return row;
}

// --- Sprite rendering --------------------------------------------------------

namespace {

struct Sprite {
    std::vector<double> radius;
    std::vector<double> angle; // vertex angles at spin 0
    double color[3];
    double center_row;
    double center_col;
};

// Scalene polygons: no rotational self-symmetry, so the spin angle is
// identifiable on the full circle.
const Sprite kSharedSprite{
    {13.0, 9.0, 5.0}, {0.0, 2.2, 4.0}, {0.95, 0.35, 0.15}, 30.0, 21.0};
const Sprite kCamera1Sprite{
    {12.0, 7.0, 10.0, 6.0}, {0.3, 1.4, 3.1, 4.9}, {0.20, 0.85, 0.30}, 30.0, 58.0};
const Sprite kCamera2Sprite{
    {12.0, 6.0, 9.0, 5.0, 10.0}, {0.1, 1.1, 2.4, 3.6, 5.2}, {0.25, 0.45, 0.95}, 30.0, 58.0};

bool point_in_polygon(double pr, double pc, const std::vector<std::pair<double, double>>& poly) {
    bool inside = false;
    const std::size_t n = poly.size();
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
        const auto [ri, ci] = poly[i];
        const auto [rj, cj] = poly[j];
        if ((ri > pr) != (rj > pr)) {
            const double cross_c = ci + (pr - ri) * (cj - ci) / (rj - ri);
            if (pc < cross_c) inside = !inside;
        }
    }
    return inside;
}

void draw_sprite(VecX& canvas, const Sprite& sprite, double spin) {
    std::vector<std::pair<double, double>> poly(sprite.radius.size());
    double max_radius = 0.0;
    for (std::size_t k = 0; k < sprite.radius.size(); ++k) {
        const double a = sprite.angle[k] + spin;
        poly[k] = {sprite.center_row - sprite.radius[k] * std::sin(a),
                   sprite.center_col + sprite.radius[k] * std::cos(a)};
        max_radius = std::max(max_radius, sprite.radius[k]);
    }
    const auto r_lo = std::max<Index>(0, static_cast<Index>(sprite.center_row - max_radius - 1));
    const auto r_hi =
        std::min<Index>(SpriteScene::height - 1, static_cast<Index>(sprite.center_row + max_radius + 1));
    const auto c_lo = std::max<Index>(0, static_cast<Index>(sprite.center_col - max_radius - 1));
    const auto c_hi =
        std::min<Index>(SpriteScene::width - 1, static_cast<Index>(sprite.center_col + max_radius + 1));

    // 3x3 supersampling per pixel makes coverage (and hence the rendered
    // view) vary smoothly with the spin angle.
    static const double offsets[3] = {-1.0 / 3.0, 0.0, 1.0 / 3.0};
    for (Index r = r_lo; r <= r_hi; ++r) {
        for (Index c = c_lo; c <= c_hi; ++c) {
            int hits = 0;
            for (double dr : offsets) {
                for (double dc : offsets) {
                    if (point_in_polygon(static_cast<double>(r) + dr, static_cast<double>(c) + dc,
                                         poly)) {
                        ++hits;
                    }
                }
            }
            if (hits == 0) continue;
            const double coverage = static_cast<double>(hits) / 9.0;
            const Index base = (r * SpriteScene::width + c) * SpriteScene::channels;
            for (Index ch = 0; ch < SpriteScene::channels; ++ch) {
                canvas[base + ch] =
                    std::min(1.0, canvas[base + ch] + coverage * sprite.color[ch]);
            }
        }
    }
}

MatX render_view(const Sprite& side_sprite, double x, double side_angle) {
    VecX canvas = VecX::Zero(SpriteScene::flat_dim);
    draw_sprite(canvas, kSharedSprite, x);
    draw_sprite(canvas, side_sprite, side_angle);
    return canvas.transpose();
}

} // namespace

MatX render_camera1(double x, double y) { return render_view(kCamera1Sprite, x, y); }

MatX render_camera2(double x, double z) { return render_view(kCamera2Sprite, x, z); }

PairedDataset gen_spinning_sprites(Index n, RngStream& stream) {
    if (n < 1) throw ConfigError("gen_spinning_sprites: n must be >= 1");
    PairedDataset ds;
    ds.s1.resize(n, SpriteScene::flat_dim);
    ds.s2.resize(n, SpriteScene::flat_dim);
    ds.hidden_x.resize(n);
    ds.hidden_y.resize(n);
    ds.hidden_z.resize(n);
    for (Index i = 0; i < n; ++i) {
        RngStream record = stream.split(static_cast<std::uint64_t>(i));
        const double x = record.uniform(0.0, kTwoPi);
        const double y = record.uniform(0.0, kTwoPi);
        const double z = record.uniform(0.0, kTwoPi);
        ds.s1.row(i) = render_camera1(x, y);
        ds.s2.row(i) = render_camera2(x, z);
        ds.hidden_x[i] = x;
        ds.hidden_y[i] = y;
        ds.hidden_z[i] = z;
    }
    return ds;
}

// --- Two modalities ----------------------------------------------------------

double frequency_of(double x, double omega_min, double omega_max) {
    return omega_min + (omega_max - omega_min) * x / kTwoPi;
}

PairedDataset gen_two_modalities(Index n, const ImageGray& base_image, Index T, double omega_min,
                                 double omega_max, RngStream& stream) {
    if (n < 1) throw ConfigError("gen_two_modalities: n must be >= 1");
    if (T < 2) throw ConfigError("gen_two_modalities: T must be >= 2");
    if (!(omega_min > 0.0 && omega_min <= omega_max)) {
        throw ConfigError("gen_two_modalities: need 0 < omega_min <= omega_max");
    }
    if (!(omega_max < 0.5)) {
        throw ConfigError("gen_two_modalities: omega_max must be below the Nyquist rate 0.5");
    }
    if (base_image.rows() != kImageSide || base_image.cols() != kImageSide) {
        throw DataError("gen_two_modalities: base image must be 50x50");
    }

    const Index img_dim = base_image.size();
    PairedDataset ds;
    ds.s1.resize(n, 2 * img_dim);
    ds.s2.resize(n, T);
    ds.hidden_x.resize(n);
    ds.hidden_y.resize(n);
    ds.hidden_z.resize(n);
    for (Index i = 0; i < n; ++i) {
        RngStream record = stream.split(static_cast<std::uint64_t>(i));
        const double x = record.uniform(0.0, kTwoPi);
        const double y = record.uniform(0.0, kTwoPi);
        const double z = record.uniform(0.0, kTwoPi);
        ds.s1.row(i).head(img_dim) = flatten_image(rotate_image(base_image, x));
        ds.s1.row(i).tail(img_dim) = flatten_image(rotate_image(base_image, y));
        const double omega = frequency_of(x, omega_min, omega_max);
        for (Index t = 1; t <= T; ++t) {
            ds.s2(i, t - 1) = std::sin(kTwoPi * omega * static_cast<double>(t) + z);
        }
        ds.hidden_x[i] = x;
        ds.hidden_y[i] = y;
        ds.hidden_z[i] = z;
    }
    return ds;
}

// --- Rotation pairs ----------------------------------------------------------

std::pair<PairedDataset, PairedDataset> gen_rotation_pairs(Index n,
                                                           const std::vector<ImageGray>& corpus,
                                                           RngStream& stream) {
    if (n < 1) throw ConfigError("gen_rotation_pairs: n must be >= 1");
    if (corpus.size() < 2) {
        throw DataError("gen_rotation_pairs: corpus needs at least 2 images");
    }
    const Index dim = corpus.front().size();
    for (const ImageGray& img : corpus) {
        if (img.size() != dim) throw DataError("gen_rotation_pairs: corpus images differ in size");
    }
    const auto n_images = static_cast<std::uint64_t>(corpus.size());

    PairedDataset pos;
    pos.s1.resize(n, dim);
    pos.s2.resize(n, dim);
    pos.hidden_x.resize(n);
    pos.hidden_y.resize(n);
    pos.hidden_z.resize(n);
    for (Index i = 0; i < n; ++i) {
        RngStream record = stream.split(static_cast<std::uint64_t>(i));
        const auto idx = record.index_below(n_images);
        const double g1 = record.uniform(0.0, kTwoPi);
        const double g2 = record.uniform(0.0, kTwoPi);
        pos.s1.row(i) = flatten_image(rotate_image(corpus[idx], g1));
        pos.s2.row(i) = flatten_image(rotate_image(corpus[idx], g2));
        pos.hidden_x[i] = static_cast<double>(idx);
        pos.hidden_y[i] = g1;
        pos.hidden_z[i] = g2;
    }

    PairedDataset neg;
    neg.label = PairLabel::negative;
    neg.s1.resize(n, dim);
    neg.s2.resize(n, dim);
    neg.hidden_x.resize(n);
    neg.hidden_x2.resize(n);
    neg.hidden_y.resize(n);
    neg.hidden_z.resize(n);
    for (Index i = 0; i < n; ++i) {
        RngStream record = stream.split(static_cast<std::uint64_t>(n + i));
        const auto i1 = record.index_below(n_images);
        auto i2 = record.index_below(n_images - 1);
        if (i2 >= i1) ++i2; // skip i1, keeping the draw uniform over the rest
        const double g1 = record.uniform(0.0, kTwoPi);
        const double g2 = record.uniform(0.0, kTwoPi);
        neg.s1.row(i) = flatten_image(rotate_image(corpus[i1], g1));
        neg.s2.row(i) = flatten_image(rotate_image(corpus[i2], g2));
        neg.hidden_x[i] = static_cast<double>(i1);
        neg.hidden_x2[i] = static_cast<double>(i2);
        neg.hidden_y[i] = g1;
        neg.hidden_z[i] = g2;
    }
    return {std::move(pos), std::move(neg)};
}

std::vector<ImageGray> blob_corpus(Index count, RngStream& stream) {
    if (count < 1) throw ConfigError("blob_corpus: count must be >= 1");
    std::vector<ImageGray> corpus;
    corpus.reserve(static_cast<std::size_t>(count));
    for (Index k = 0; k < count; ++k) {
        RngStream rng = stream.split(static_cast<std::uint64_t>(k));
        ImageGray img = ImageGray::Zero(kImageSide, kImageSide);
        for (int bump = 0; bump < 5; ++bump) {
            const double amp = rng.uniform(0.3, 1.0);
            const double sigma = rng.uniform(3.0, 8.0);
            const double cr = rng.uniform(10.0, 40.0);
            const double cc = rng.uniform(10.0, 40.0);
            const double inv = 1.0 / (2.0 * sigma * sigma);
            for (Index r = 0; r < kImageSide; ++r) {
                for (Index c = 0; c < kImageSide; ++c) {
                    const double dr = static_cast<double>(r) - cr;
                    const double dc = static_cast<double>(c) - cc;
                    img(r, c) += amp * std::exp(-(dr * dr + dc * dc) * inv);
                }
            }
        }
        img /= img.maxCoeff();
        corpus.push_back(std::move(img));
    }
    return corpus;
}

// --- PGM loading ---------------------------------------------------------------

namespace {

// Next whitespace-delimited token, skipping '#' comment lines.
std::string next_pgm_token(std::istream& in) {
    std::string token;
    int ch = 0;
    while ((ch = in.get()) != EOF) {
        if (ch == '#') {
            while ((ch = in.get()) != EOF && ch != '\n') {
            }
            continue;
        }
        if (std::isspace(ch)) {
            if (!token.empty()) return token;
            continue;
        }
        token.push_back(static_cast<char>(ch));
    }
    return token;
}

ImageGray resize_area(const ImageGray& src, Index out_side) {
    const double row_scale = static_cast<double>(src.rows()) / static_cast<double>(out_side);
    const double col_scale = static_cast<double>(src.cols()) / static_cast<double>(out_side);
    ImageGray out(out_side, out_side);
    for (Index r = 0; r < out_side; ++r) {
        const double r0 = static_cast<double>(r) * row_scale;
        const double r1 = static_cast<double>(r + 1) * row_scale;
        for (Index c = 0; c < out_side; ++c) {
            const double c0 = static_cast<double>(c) * col_scale;
            const double c1 = static_cast<double>(c + 1) * col_scale;
            double sum = 0.0;
            double area = 0.0;
            for (auto i = static_cast<Index>(std::floor(r0)); i < static_cast<Index>(std::ceil(r1));
                 ++i) {
                const double wr = std::min(r1, static_cast<double>(i + 1)) -
                                  std::max(r0, static_cast<double>(i));
                if (wr <= 0.0) continue;
                for (auto j = static_cast<Index>(std::floor(c0));
                     j < static_cast<Index>(std::ceil(c1)); ++j) {
                    const double wc = std::min(c1, static_cast<double>(j + 1)) -
                                      std::max(c0, static_cast<double>(j));
                    if (wc <= 0.0) continue;
                    sum += wr * wc * src(std::min(i, src.rows() - 1), std::min(j, src.cols() - 1));
                    area += wr * wc;
                }
            }
            out(r, c) = sum / area;
        }
    }
    return out;
}

} // namespace

ImageGray load_pgm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("load_pgm: cannot open '" + path + "'");

    if (next_pgm_token(in) != "P5") {
        throw DataError("load_pgm: '" + path + "' is not a binary (P5) PGM");
    }
    Index width = 0, height = 0;
    long maxval = 0;
    try {
        width = std::stol(next_pgm_token(in));
        height = std::stol(next_pgm_token(in));
        maxval = std::stol(next_pgm_token(in));
    } catch (const std::exception&) {
        throw DataError("load_pgm: malformed header in '" + path + "'");
    }
    if (width < 1 || height < 1) throw DataError("load_pgm: bad dimensions in '" + path + "'");
    if (maxval < 1 || maxval > 255) {
        throw DataError("load_pgm: only 8-bit PGMs supported ('" + path + "')");
    }

    std::vector<unsigned char> bytes(static_cast<std::size_t>(width * height));
    in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (in.gcount() != static_cast<std::streamsize>(bytes.size())) {
        throw DataError("load_pgm: truncated pixel data in '" + path + "'");
    }

    ImageGray img(height, width);
    for (Index r = 0; r < height; ++r) {
        for (Index c = 0; c < width; ++c) {
            img(r, c) = static_cast<double>(bytes[static_cast<std::size_t>(r * width + c)]) /
                        static_cast<double>(maxval);
        }
    }

    const Index side = std::min(height, width);
    const Index r_off = (height - side) / 2;
    const Index c_off = (width - side) / 2;
    ImageGray cropped = img.block(r_off, c_off, side, side);
    if (side == kImageSide) return cropped;
    return resize_area(cropped, kImageSide);
}

std::vector<ImageGray> load_image_directory(const std::string& dir) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(dir)) {
        throw DataError("load_image_directory: '" + dir + "' is not a directory");
    }
    std::vector<std::string> paths;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        std::string ext = entry.path().extension().string();
        std::transform(ext.begin(), ext.end(), ext.begin(),
                       [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
        if (ext == ".pgm") paths.push_back(entry.path().string());
    }
    std::sort(paths.begin(), paths.end());
    if (paths.empty()) {
        throw DataError("load_image_directory: no .pgm files in '" + dir + "'");
    }
    std::vector<ImageGray> corpus;
    corpus.reserve(paths.size());
    for (const std::string& p : paths) corpus.push_back(load_pgm(p));
    return corpus;
}

} // namespace covar
