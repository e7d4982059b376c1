#include <algorithm>
#include <fstream>
#include <map>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

#include "sahm/dataforge.hpp"

namespace sahm::dataforge {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

Rng stream(std::uint64_t seed, std::uint32_t a, std::uint32_t b)
{
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), a, b};
    return Rng(seq);
}

constexpr std::uint32_t kSceneStream = 0x5CE4E;
constexpr std::uint32_t kPairStream = 0x9A12;
constexpr std::uint32_t kSplitStream = 0x5B117;

std::string numbered(std::string_view stem, int id)
{
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d", id);
    return std::string(stem) + "_" + buf + ".png";
}

Image8 mask_to_disk(const Image8& m)
{
    Image8 out = m;
    for (auto& v : out.data) v = v ? 255 : 0;
    return out;
}

std::vector<int> used_clusters()
{
    std::vector<int> out;
    for (const auto& c : categories()) out.push_back(cluster_of(c));
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

} // namespace

void check_feasible(const GeneratorConfig& config)
{
    if (config.pairs < 1) throw std::invalid_argument("generator: pairs must be >= 1");
    if (config.expressions_per_pair < 1) throw std::invalid_argument("generator: expressions_per_pair must be >= 1");
    if (config.scenes_per_cluster < 1 || config.match_k < 1) throw std::invalid_argument("generator: empty scene pools");
    const auto [t1, t2] = size_thresholds(config.side);
    if (config.quota.small > 0.0 && std::ceil(std::max(4.0, 0.3 * t1)) >= t1)
        throw std::invalid_argument("generator: canvas side " + std::to_string(config.side) +
                                    " leaves no pixel area for small objects (small threshold " + std::to_string(t1) +
                                    " px); use side >= 40 or a zero small quota");
    if (config.quota.large > 0.0 && std::min(4.0 * t2, 0.3 * config.side * config.side) <= t2 + 1.0)
        throw std::invalid_argument("generator: canvas side " + std::to_string(config.side) + " cannot host large objects");
    const double q = config.quota.small + config.quota.medium + config.quota.large;
    if (!(q > 0.0) || config.quota.small < 0 || config.quota.medium < 0 || config.quota.large < 0)
        throw std::invalid_argument("generator: size quota must be non-negative with a positive sum");
    if (config.train_fraction < 0 || config.val_fraction < 0 || config.train_fraction + config.val_fraction > 1.0)
        throw std::invalid_argument("generator: split fractions must be non-negative and sum to at most 1");
}

std::vector<Scene> build_scene_pool(const GeneratorConfig& config, std::uint64_t seed)
{
    Rng rng = stream(seed, kSceneStream, 0);
    std::vector<Scene> scenes;
    int id = 0;
    for (int cluster : used_clusters())
        for (int k = 0; k < config.scenes_per_cluster; ++k)
            scenes.push_back(make_scene(id++, cluster, config.side, config.max_background_objects, rng));
    return scenes;
}

std::string validate_pair(const ScenePair& pair, int side)
{
    const Image8& m = pair.mask;
    if (m.width != side || m.height != side || m.channels != 1) return "mask has the wrong size";
    if (std::none_of(m.data.begin(), m.data.end(), [](std::uint8_t v) { return v != 0; })) return "mask is empty";
    for (int y = 0; y < side; ++y)
        for (int x = 0; x < side; ++x)
            if (!m.at(x, y))
                for (int c = 0; c < 3; ++c)
                    if (pair.composite.at(x, y, c) != pair.background.at(x, y, c))
                        return "composite differs from background outside the mask";
    if (size_class(m) != pair.size) return "size class does not match the mask area";
    if (pair.expressions.empty()) return "no expression";
    const std::size_t target = pair.objects.size() - 1;
    for (const auto& d : pair.expressions) {
        if (!textproc::is_valid_bio(d.expression.roles)) return "invalid role sequence: " + d.expression.text();
        if (count_matches(pair.objects, d.constraint, side) != 1 || !satisfies(pair.objects, target, d.constraint, side))
            return "expression is ambiguous: " + d.expression.text();
    }
    return {};
}

ScenePair generate_pair(const GeneratorConfig& config, std::uint64_t seed, int id, const std::vector<Scene>& scenes,
                        bool* short_pool)
{
    Rng rng = stream(seed, kPairStream, static_cast<std::uint32_t>(id));
    const SizeClass target = sample_size_class(config.quota, rng);
    if (short_pool) *short_pool = false;
    constexpr int kAttempts = 200;
    for (int attempt = 0; attempt < kAttempts; ++attempt) {
        ObjectSpec spec{categories()[std::uniform_int_distribution<std::size_t>(0, categories().size() - 1)(rng)],
                        colors()[std::uniform_int_distribution<std::size_t>(0, colors().size() - 1)(rng)],
                        textures()[std::uniform_int_distribution<std::size_t>(0, textures().size() - 1)(rng)]};
        std::vector<Scene> pool;
        const int cluster = cluster_of(spec.category);
        for (const auto& s : scenes)
            if (s.cluster == cluster) pool.push_back(s);
        const MatchResult match = match_scenes(spec, pool, config.match_k);
        if (short_pool && match.short_pool) *short_pool = true;
        for (int idx : match.indices) {
            const Scene& scene = pool[static_cast<std::size_t>(idx)];
            auto placement = place_object(spec, scene, target, rng);
            if (!placement) continue;
            std::vector<SceneObject> objects = scene.objects;
            objects.push_back(make_scene_object(spec, *placement, config.side));
            auto descriptions = describe(objects, objects.size() - 1, config.side, config.expressions_per_pair, rng);
            if (descriptions.empty()) continue;
            auto [raw, mask] = composite(scene, *placement);
            ScenePair pair;
            pair.id = id;
            pair.composite = harmonize(raw, mask);
            pair.background = scene.image;
            pair.mask = std::move(mask);
            pair.expressions = std::move(descriptions);
            pair.size = target;
            pair.object = spec;
            pair.scene_id = scene.id;
            pair.objects = std::move(objects);
            if (auto err = validate_pair(pair, config.side); !err.empty())
                throw std::logic_error("pair " + std::to_string(id) + " violates an invariant: " + err);
            return pair;
        }
    }
    throw std::runtime_error("generator: pair " + std::to_string(id) + " could not be placed as a " +
                             std::string(size_class_name(target)) + " object after " + std::to_string(kAttempts) +
                             " object draws");
}

DatasetManifest generate_dataset(const GeneratorConfig& config, std::uint64_t seed, const fs::path& out)
{
    check_feasible(config);
    fs::create_directories(out);
    const std::vector<Scene> scenes = build_scene_pool(config, seed);

    DatasetManifest m;
    m.seed = seed;
    m.side = config.side;
    m.pairs = config.pairs;
    m.split.assign(static_cast<std::size_t>(config.pairs), "test");
    {
        std::vector<int> order(static_cast<std::size_t>(config.pairs));
        std::iota(order.begin(), order.end(), 0);
        Rng rng = stream(seed, kSplitStream, 0);
        std::shuffle(order.begin(), order.end(), rng);
        const int n_train = static_cast<int>(std::lround(config.train_fraction * config.pairs));
        const int n_val = std::min(config.pairs - n_train, static_cast<int>(std::lround(config.val_fraction * config.pairs)));
        for (int i = 0; i < config.pairs; ++i)
            m.split[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])] = i < n_train ? "train" : i < n_train + n_val ? "val" : "test";
        m.split_sizes = {n_train, n_val, config.pairs - n_train - n_val};
    }

    std::ofstream ann(out / "annotations.jsonl", std::ios::binary);
    if (!ann) throw std::runtime_error("cannot write " + (out / "annotations.jsonl").string());
    json files = json::array();
    for (int id = 0; id < config.pairs; ++id) {
        bool short_pool = false;
        const ScenePair pair = generate_pair(config, seed, id, scenes, &short_pool);
        m.short_pools += short_pool;
        const auto& split = m.split[static_cast<std::size_t>(id)];
        ++m.size_tally[static_cast<std::size_t>(pair.size)];
        write_png(out / numbered("composite", id), pair.composite);
        write_png(out / numbered("gt", id), pair.background);
        write_png(out / numbered("mask", id), mask_to_disk(pair.mask));
        for (const auto& d : pair.expressions) {
            json roles = json::array();
            for (auto r : d.expression.roles) roles.push_back(std::string(textproc::role_name(r)));
            json rec{{"pair", id},
                     {"expression", d.expression.text()},
                     {"tokens", d.expression.tokens},
                     {"roles", roles},
                     {"size_class", std::string(size_class_name(pair.size))},
                     {"split", split},
                     {"category", pair.object.category},
                     {"cluster", std::string(cluster_name(cluster_of(pair.object.category)))}};
            ann << rec.dump() << "\n";
        }
        files.push_back({{"id", id},
                         {"composite", numbered("composite", id)},
                         {"gt", numbered("gt", id)},
                         {"mask", numbered("mask", id)},
                         {"split", split},
                         {"size_class", std::string(size_class_name(pair.size))},
                         {"scene", pair.scene_id}});
    }
    lexicon_vocabulary().save(out / "vocab.txt");

    json manifest{{"seed", seed},
                  {"side", config.side},
                  {"pairs", config.pairs},
                  {"splits", {{"train", m.split_sizes[0]}, {"val", m.split_sizes[1]}, {"test", m.split_sizes[2]}}},
                  {"size_tally", {{"small", m.size_tally[0]}, {"medium", m.size_tally[1]}, {"large", m.size_tally[2]}}},
                  {"short_scene_pools", m.short_pools},
                  {"config",
                   {{"scenes_per_cluster", config.scenes_per_cluster},
                    {"max_background_objects", config.max_background_objects},
                    {"expressions_per_pair", config.expressions_per_pair},
                    {"match_k", config.match_k},
                    {"quota", {config.quota.small, config.quota.medium, config.quota.large}}}},
                  {"files", files}};
    std::ofstream(out / "manifest.json", std::ios::binary) << manifest.dump(2) << "\n";
    return m;
}

std::vector<const PairRecord*> Dataset::split(std::string_view name) const
{
    std::vector<const PairRecord*> out;
    for (const auto& p : pairs)
        if (name == "all" || p.split == name) out.push_back(&p);
    return out;
}

Dataset load_dataset(const fs::path& root)
{
    std::ifstream in(root / "manifest.json");
    if (!in) throw std::runtime_error("no manifest.json under " + root.string());
    json manifest = json::parse(in);
    Dataset d;
    d.root = root;
    d.side = manifest.at("side").get<int>();
    d.seed = manifest.at("seed").get<std::uint64_t>();
    d.vocab = textproc::Vocabulary::load(root / "vocab.txt");
    std::map<int, std::size_t> index;
    for (const auto& f : manifest.at("files")) {
        PairRecord p;
        p.id = f.at("id").get<int>();
        p.split = f.at("split").get<std::string>();
        const auto sc = f.at("size_class").get<std::string>();
        p.size = sc == "small" ? SizeClass::Small : sc == "large" ? SizeClass::Large : SizeClass::Medium;
        p.composite = root / f.at("composite").get<std::string>();
        p.background = root / f.at("gt").get<std::string>();
        p.mask = root / f.at("mask").get<std::string>();
        index[p.id] = d.pairs.size();
        d.pairs.push_back(std::move(p));
    }
    std::ifstream ann(root / "annotations.jsonl");
    if (!ann) throw std::runtime_error("no annotations.jsonl under " + root.string());
    for (std::string line; std::getline(ann, line);) {
        if (line.empty()) continue;
        json rec = json::parse(line);
        auto it = index.find(rec.at("pair").get<int>());
        if (it == index.end()) throw std::runtime_error("annotation for unknown pair " + rec.at("pair").dump());
        Expression e;
        e.tokens = rec.at("tokens").get<std::vector<std::string>>();
        for (const auto& r : rec.at("roles")) e.roles.push_back(textproc::parse_role(r.get<std::string>()));
        if (e.tokens.size() != e.roles.size() || e.tokens.empty())
            throw std::runtime_error("malformed annotation: " + line);
        d.pairs[it->second].expressions.push_back(std::move(e));
    }
    return d;
}

} // namespace sahm::dataforge
