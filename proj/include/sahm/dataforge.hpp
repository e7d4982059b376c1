#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "sahm/image_io.hpp"
#include "sahm/textproc.hpp"

namespace sahm::dataforge {

using Rng = std::mt19937_64;

// ---------------------------------------------------------------- clusters

inline constexpr int kNumClusters = 17;

/// Object categories of the 80-class detection vocabulary.
const std::vector<std::string>& detection_categories();
std::string_view cluster_name(int cluster);

/// Cluster id of a category. Covers the 80 detection categories plus the
/// generator's geometric shapes; throws for anything else.
int cluster_of(std::string_view category);

// ----------------------------------------------------------------- lexicon

const std::vector<std::string>& categories(); // categories with a sprite
const std::vector<std::string>& colors();
const std::vector<std::string>& textures();

/// Appearance of one object.
struct ObjectSpec {
    std::string category;
    std::string color;
    std::string texture;

    /// Normalized tokens of "color texture category".
    std::set<std::string> tokens() const;
};

std::array<std::uint8_t, 3> color_rgb(std::string_view color);

// ----------------------------------------------------------------- sprites

/// RGB raster with a binary alpha channel that is the exact object mask.
struct Sprite {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> rgb;   // width * height * 3
    std::vector<std::uint8_t> alpha; // width * height, 0 or 1

    bool inside(int x, int y) const { return alpha[static_cast<std::size_t>(y) * width + x] != 0; }
    int area() const;
};

/// Draws `spec` with a bounding box of about side * side pixels, keeping the
/// category's aspect ratio.
Sprite render_sprite(const ObjectSpec& spec, double side);

/// Fraction of the bounding box covered by the category's silhouette.
double fill_ratio(std::string_view category);

// ------------------------------------------------------------------ scenes

enum class SizeClass { Small = 0, Medium = 1, Large = 2 };
std::string_view size_class_name(SizeClass c);

/// Area thresholds (small below the first, large above the second) on a
/// square canvas; the reference values are 32^2 and 96^2 at side 480.
std::pair<double, double> size_thresholds(int canvas_side);
SizeClass size_class(int area, int canvas_side);
SizeClass size_class(const Image8& mask);

struct SceneObject {
    ObjectSpec spec;
    int x = 0, y = 0;          // top-left of the sprite box
    int width = 0, height = 0; // sprite box
    std::vector<std::uint8_t> mask; // canvas-sized, 0 or 1
    double cx = 0.0, cy = 0.0; // mask centroid
};

struct Scene {
    int id = 0;
    int cluster = 0;
    Image8 image; // background with its own objects, RGB
    std::vector<SceneObject> objects;
};

/// |A intersect B| / |A union B|, with 0 / 0 taken as 0.
double jaccard(const std::set<std::string>& a, const std::set<std::string>& b);

/// Highest Jaccard similarity between `object` and any object in `scene`.
double scene_similarity(const ObjectSpec& object, const Scene& scene);

struct MatchResult {
    std::vector<int> indices; // into the pool, best first
    bool short_pool = false;  // pool held fewer than k scenes
};

/// The k scenes whose most similar object is least similar to `object`;
/// ties go to the lower scene id.
MatchResult match_scenes(const ObjectSpec& object, const std::vector<Scene>& pool, int k = 5);

struct SizeQuota {
    double small = 0.11;
    double medium = 0.53;
    double large = 0.36;
};

/// Samples a size class according to the quota.
SizeClass sample_size_class(const SizeQuota& quota, Rng& rng);

struct Placement {
    int x = 0, y = 0;
    Sprite sprite;
    SizeClass size = SizeClass::Medium;
};

inline constexpr int kPlacementMargin = 2;
inline constexpr int kPlacementAttempts = 100;

/// Rejection-samples a scale within `target`'s area band and a position with
/// the margin kept and no overlap with the scene's objects. nullopt after
/// kPlacementAttempts failures.
std::optional<Placement> place_object(const ObjectSpec& spec, const Scene& scene, SizeClass target, Rng& rng);

/// Pastes the sprite into a copy of the scene image. Returns the composite
/// and the canvas mask.
std::pair<Image8, Image8> composite(const Scene& scene, const Placement& placement);

/// Affine luminance matching of the masked pixels to the ring obtained by
/// dilating the mask by `ring` pixels. Pixels outside the mask are untouched.
Image8 harmonize(const Image8& composite, const Image8& mask, int ring = 4);

SceneObject make_scene_object(const ObjectSpec& spec, const Placement& placement, int side);

/// Random background with up to `max_objects` objects from `cluster`.
Scene make_scene(int id, int cluster, int side, int max_objects, Rng& rng);

// ------------------------------------------------------------ expressions

struct Expression {
    std::vector<std::string> tokens;
    std::vector<textproc::Role> roles;
    std::string text() const;
};

enum class Relation { None, LeftOf, RightOf, Above, Below };
std::string_view relation_phrase(Relation r);

/// What an expression asserts about its referent.
struct Constraint {
    std::string category;
    std::optional<std::string> color;
    std::optional<std::string> texture;
    std::optional<std::string> horizontal; // "left" / "right"
    std::optional<std::string> vertical;   // "top" / "bottom"
    Relation relation = Relation::None;
    std::optional<std::string> near_category; // nearest neighbour, any direction
    std::optional<std::string> relation_category;
};

/// Spatial facts of objects[index] inside a scene of side `side`.
struct SpatialFacts {
    std::optional<std::string> horizontal;
    std::optional<std::string> vertical;
    int nearest = -1;
    Relation relation = Relation::None;
};
SpatialFacts spatial_facts(const std::vector<SceneObject>& objects, std::size_t index, int side);

bool satisfies(const std::vector<SceneObject>& objects, std::size_t index, const Constraint& c, int side);

/// Number of scene objects satisfying `c`.
int count_matches(const std::vector<SceneObject>& objects, const Constraint& c, int side);

struct Description {
    Expression expression;
    Constraint constraint;
    int template_id = 0;
};

inline constexpr int kNumTemplates = 11;

/// Instantiates template `template_id` for objects[index]. nullopt when the
/// template does not apply (e.g. no spatial fact to state).
std::optional<Description> instantiate(int template_id, const std::vector<SceneObject>& objects, std::size_t index,
                                       int side);

/// Up to `count` distinct expressions that single out objects[index].
std::vector<Description> describe(const std::vector<SceneObject>& objects, std::size_t index, int side, int count,
                                  Rng& rng);

/// Scene-free templated expressions with role labels for tagger training.
std::vector<textproc::TaggedExample> template_corpus(int count, std::uint64_t seed);

/// Every word the templates can produce.
textproc::Vocabulary lexicon_vocabulary();

// ------------------------------------------------------------------ dataset

struct GeneratorConfig {
    int pairs = 500;
    int side = 64;
    int scenes_per_cluster = 8;
    int max_background_objects = 2;
    int expressions_per_pair = 2;
    int match_k = 5;
    SizeQuota quota;
    double train_fraction = 0.85;
    double val_fraction = 0.075;
};

struct ScenePair {
    int id = 0;
    Image8 composite;
    Image8 background;
    Image8 mask; // 1 channel, 0 / 255 on disk, 0 / 1 here
    std::vector<Description> expressions;
    SizeClass size = SizeClass::Medium;
    ObjectSpec object;
    int scene_id = 0;
    std::vector<SceneObject> objects; // background objects followed by the target
};

/// Builds pair `id`. Deterministic in (config, seed, id). `short_pool` is
/// set when scene matching saw fewer than k candidates.
ScenePair generate_pair(const GeneratorConfig& config, std::uint64_t seed, int id, const std::vector<Scene>& scenes,
                        bool* short_pool = nullptr);

/// Scene pools for every cluster used by the categories.
std::vector<Scene> build_scene_pool(const GeneratorConfig& config, std::uint64_t seed);

/// Checks the pair invariants; returns an empty string or the first violation.
std::string validate_pair(const ScenePair& pair, int side);

struct DatasetManifest {
    std::uint64_t seed = 0;
    int side = 0;
    int pairs = 0;
    std::array<int, 3> size_tally{};
    std::array<int, 3> split_sizes{}; // train, val, test
    std::vector<std::string> split;   // per pair
    int short_pools = 0;              // scene matches that saw fewer than k scenes
};

/// Throws with a diagnostic when the quota cannot be met on this canvas.
void check_feasible(const GeneratorConfig& config);

/// Writes PNGs, annotations.jsonl, vocab.txt and manifest.json into `out`.
DatasetManifest generate_dataset(const GeneratorConfig& config, std::uint64_t seed, const std::filesystem::path& out);

// ----------------------------------------------------------------- loading

struct PairRecord {
    int id = 0;
    std::string split;
    SizeClass size = SizeClass::Medium;
    std::filesystem::path composite, background, mask;
    std::vector<Expression> expressions;
};

struct Dataset {
    std::filesystem::path root;
    int side = 0;
    std::uint64_t seed = 0;
    textproc::Vocabulary vocab;
    std::vector<PairRecord> pairs;

    std::vector<const PairRecord*> split(std::string_view name) const;
};

Dataset load_dataset(const std::filesystem::path& root);

} // namespace sahm::dataforge
