// Procedural generators for the three experiments. Every record is driven by
// a hidden triple (x, y, z): x is shared by both sensors, y only reaches
// sensor 1, z only sensor 2.
#pragma once

#include <string>
#include <utility>
#include <vector>

#include "covar/pairing.hpp"
#include "covar/rng.hpp"
#include "covar/types.hpp"

namespace covar {

/// Grayscale image with intensities in [0, 1]; generators use 50x50.
using ImageGray = MatX;

constexpr Index kImageSide = 50;

/// Rotation about the image center with bilinear interpolation; pixels
/// sampled from outside the source are 0. Positive theta turns the content
/// counterclockwise (rows increase downward). theta = 0 is an exact copy.
ImageGray rotate_image(const ImageGray& img, double theta);

/// Flattens row-major into a 1 x (rows*cols) row.
MatX flatten_image(const ImageGray& img);

// --- Spinning-sprites scene ------------------------------------------------
//
// A 60x80 three-channel canvas with two filled polygons per camera view:
// the shared sprite spins by the common angle x at a fixed center on the
// left; the camera-specific sprite (one shape per camera) spins by y or z on
// the right. Sprites are scalene so every angle in [0, 2pi) renders
// distinctly, and their regions never overlap.
struct SpriteScene {
    static constexpr Index height = 60;
    static constexpr Index width = 80;
    static constexpr Index channels = 3;
    static constexpr Index flat_dim = height * width * channels; // 14400

    /// Column that separates the shared sprite's region from the
    /// camera-specific one (shared strictly left of it).
    static constexpr Index region_boundary_col = 40;
};

/// Camera views as flat rows of length SpriteScene::flat_dim, layout
/// (row, col, channel) row-major. Camera 1 sees the shared sprite at angle x
/// and its own sprite at angle y; camera 2 sees the shared sprite at the
/// same x and a different sprite at angle z.
MatX render_camera1(double x, double y);
MatX render_camera2(double x, double z);

/// n positive pairs with x, y, z drawn iid uniform on [0, 2pi) from
/// per-record child streams (record i uses stream.split(i)), so generation
/// order cannot change the data.
PairedDataset gen_spinning_sprites(Index n, RngStream& stream);

// --- Two-modalities generator ----------------------------------------------

constexpr Index kTwoModalitiesDefaultT = 100;
constexpr double kTwoModalitiesOmegaMin = 0.01;
constexpr double kTwoModalitiesOmegaMax = 0.1;

/// Frequency map: affine in the common angle, omega(x) = omega_min +
/// (omega_max - omega_min) * x / (2pi).
double frequency_of(double x, double omega_min, double omega_max);

/// Sensor 1: concatenation of the base image rotated by x and by y
/// (d1 = 2 * 50 * 50). Sensor 2: the T samples sin(2pi omega(x) t + z),
/// t = 1..T. Requires omega_max below the Nyquist rate 0.5.
PairedDataset gen_two_modalities(Index n, const ImageGray& base_image, Index T,
                                 double omega_min, double omega_max, RngStream& stream);

// --- Rotation-invariance generator -------------------------------------------

/// Positive records pair two rotations of one base image; negative records
/// pair rotations of two distinct base images. hidden_x stores the base
/// image index (hidden_x2 the second index for negatives); hidden_y/z store
/// the two angles.
std::pair<PairedDataset, PairedDataset> gen_rotation_pairs(Index n,
                                                           const std::vector<ImageGray>& corpus,
                                                           RngStream& stream);

/// Procedural stand-in corpus: each image is a sum of 5 random Gaussian
/// bumps, normalized to peak 1. Image k depends only on stream.split(k).
std::vector<ImageGray> blob_corpus(Index count, RngStream& stream);

// --- Optional external images -------------------------------------------------

/// Reads a binary (P5) 8-bit PGM, center-crops to square, and rescales to
/// 50x50 by area averaging.
ImageGray load_pgm(const std::string& path);

/// Loads every *.pgm in a directory, sorted by filename.
std::vector<ImageGray> load_image_directory(const std::string& dir);

} // namespace covar
