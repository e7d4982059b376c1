#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "sahm/dataforge.hpp"

namespace sahm::dataforge {

namespace {

constexpr double kReferenceSide = 480.0;
constexpr double kSmallArea = 32.0 * 32.0;
constexpr double kMediumArea = 96.0 * 96.0;

// Harmonization gain bounds; a flat background ring would otherwise erase
// every texture on the pasted object.
constexpr double kMinGain = 0.5;
constexpr double kMaxGain = 2.0;

double luminance(std::uint8_t r, std::uint8_t g, std::uint8_t b) { return 0.299 * r + 0.587 * g + 0.114 * b; }

std::pair<double, double> area_band(SizeClass c, int side)
{
    const auto [t1, t2] = size_thresholds(side);
    const double canvas = static_cast<double>(side) * side;
    switch (c) {
    case SizeClass::Small: return {std::max(4.0, 0.3 * t1), t1 - 1e-9};
    case SizeClass::Medium: return {t1, t2};
    case SizeClass::Large: return {t2 + 1.0, std::min(4.0 * t2, 0.3 * canvas)};
    }
    return {t1, t2};
}

std::vector<std::uint8_t> occupancy(const Scene& scene)
{
    const int side = scene.image.width;
    std::vector<std::uint8_t> occ(static_cast<std::size_t>(side) * scene.image.height, 0);
    for (const auto& o : scene.objects)
        for (std::size_t i = 0; i < occ.size(); ++i) occ[i] |= o.mask[i];
    return occ;
}

} // namespace

std::string_view size_class_name(SizeClass c)
{
    switch (c) {
    case SizeClass::Small: return "small";
    case SizeClass::Medium: return "medium";
    case SizeClass::Large: return "large";
    }
    return "medium";
}

std::pair<double, double> size_thresholds(int canvas_side)
{
    const double f = (canvas_side / kReferenceSide) * (canvas_side / kReferenceSide);
    return {kSmallArea * f, kMediumArea * f};
}

SizeClass size_class(int area, int canvas_side)
{
    const auto [t1, t2] = size_thresholds(canvas_side);
    if (area < t1) return SizeClass::Small;
    if (area <= t2) return SizeClass::Medium;
    return SizeClass::Large;
}

SizeClass size_class(const Image8& mask)
{
    if (mask.width != mask.height) throw std::invalid_argument("size_class: canvas must be square");
    const int area = static_cast<int>(std::count_if(mask.data.begin(), mask.data.end(), [](std::uint8_t v) { return v != 0; }));
    return size_class(area, mask.width);
}

double jaccard(const std::set<std::string>& a, const std::set<std::string>& b)
{
    std::size_t inter = 0;
    for (const auto& t : a) inter += b.count(t);
    const std::size_t uni = a.size() + b.size() - inter;
    return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

double scene_similarity(const ObjectSpec& object, const Scene& scene)
{
    const auto tokens = object.tokens();
    double best = 0.0;
    for (const auto& o : scene.objects) best = std::max(best, jaccard(tokens, o.spec.tokens()));
    return best;
}

MatchResult match_scenes(const ObjectSpec& object, const std::vector<Scene>& pool, int k)
{
    MatchResult r;
    std::vector<std::pair<double, int>> scored;
    for (std::size_t i = 0; i < pool.size(); ++i) scored.emplace_back(scene_similarity(object, pool[i]), static_cast<int>(i));
    std::sort(scored.begin(), scored.end(), [&](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first < b.first;
        return pool[static_cast<std::size_t>(a.second)].id < pool[static_cast<std::size_t>(b.second)].id;
    });
    r.short_pool = static_cast<int>(pool.size()) < k;
    const std::size_t take = std::min(pool.size(), static_cast<std::size_t>(std::max(k, 0)));
    for (std::size_t i = 0; i < take; ++i) r.indices.push_back(scored[i].second);
    return r;
}

SizeClass sample_size_class(const SizeQuota& quota, Rng& rng)
{
    std::discrete_distribution<int> d({quota.small, quota.medium, quota.large});
    return static_cast<SizeClass>(d(rng));
}

std::optional<Placement> place_object(const ObjectSpec& spec, const Scene& scene, SizeClass target, Rng& rng)
{
    const int side = scene.image.width;
    const auto occ = occupancy(scene);
    const auto [lo, hi] = area_band(target, side);
    if (hi < lo) return std::nullopt;
    const double ratio = fill_ratio(spec.category);
    std::uniform_real_distribution<double> log_area(std::log(lo), std::log(hi));
    for (int attempt = 0; attempt < kPlacementAttempts; ++attempt) {
        const double area = std::exp(log_area(rng));
        Sprite sprite = render_sprite(spec, std::sqrt(area / ratio));
        if (sprite.area() == 0 || size_class(sprite.area(), side) != target) continue;
        const int max_x = side - kPlacementMargin - sprite.width;
        const int max_y = scene.image.height - kPlacementMargin - sprite.height;
        if (max_x < kPlacementMargin || max_y < kPlacementMargin) continue;
        const int x = std::uniform_int_distribution<int>(kPlacementMargin, max_x)(rng);
        const int y = std::uniform_int_distribution<int>(kPlacementMargin, max_y)(rng);
        bool clear = true;
        for (int sy = 0; sy < sprite.height && clear; ++sy)
            for (int sx = 0; sx < sprite.width && clear; ++sx)
                if (sprite.inside(sx, sy) && occ[static_cast<std::size_t>(y + sy) * side + x + sx]) clear = false;
        if (!clear) continue;
        return Placement{x, y, std::move(sprite), target};
    }
    return std::nullopt;
}

std::pair<Image8, Image8> composite(const Scene& scene, const Placement& p)
{
    Image8 out = scene.image;
    Image8 mask(out.width, out.height, 1, 0);
    for (int sy = 0; sy < p.sprite.height; ++sy)
        for (int sx = 0; sx < p.sprite.width; ++sx) {
            if (!p.sprite.inside(sx, sy)) continue;
            const int x = p.x + sx, y = p.y + sy;
            mask.at(x, y) = 1;
            for (int c = 0; c < 3; ++c)
                out.at(x, y, c) = p.sprite.rgb[(static_cast<std::size_t>(sy) * p.sprite.width + sx) * 3 + static_cast<std::size_t>(c)];
        }
    return {std::move(out), std::move(mask)};
}

Image8 harmonize(const Image8& img, const Image8& mask, int ring)
{
    if (mask.width != img.width || mask.height != img.height || mask.channels != 1)
        throw std::invalid_argument("harmonize: mask does not match the image");
    const int w = img.width, h = img.height;
    std::vector<double> fg, bg;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const double lum = luminance(img.at(x, y, 0), img.at(x, y, 1), img.at(x, y, 2));
            if (mask.at(x, y)) {
                fg.push_back(lum);
                continue;
            }
            bool near = false;
            for (int dy = -ring; dy <= ring && !near; ++dy)
                for (int dx = -ring; dx <= ring && !near; ++dx) {
                    const int xx = x + dx, yy = y + dy;
                    near = xx >= 0 && yy >= 0 && xx < w && yy < h && mask.at(xx, yy);
                }
            if (near) bg.push_back(lum);
        }
    if (fg.empty() || bg.empty()) return img;
    auto stats = [](const std::vector<double>& v) {
        const double m = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
        double s = 0.0;
        for (double x : v) s += (x - m) * (x - m);
        return std::pair{m, std::sqrt(s / static_cast<double>(v.size()))};
    };
    const auto [mf, sf] = stats(fg);
    const auto [mr, sr] = stats(bg);
    const double gain = sf > 0.0 ? std::clamp(sr / sf, kMinGain, kMaxGain) : 1.0;
    Image8 out = img;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            if (!mask.at(x, y)) continue;
            const double lum = luminance(img.at(x, y, 0), img.at(x, y, 1), img.at(x, y, 2));
            const double shift = gain * (lum - mf) + mr - lum;
            for (int c = 0; c < 3; ++c)
                out.at(x, y, c) = static_cast<std::uint8_t>(std::clamp(std::lround(img.at(x, y, c) + shift), 0L, 255L));
        }
    return out;
}

namespace {

SceneObject scene_object(const ObjectSpec& spec, const Placement& p, int side)
{
    SceneObject o;
    o.spec = spec;
    o.x = p.x;
    o.y = p.y;
    o.width = p.sprite.width;
    o.height = p.sprite.height;
    o.mask.assign(static_cast<std::size_t>(side) * side, 0);
    double sx = 0.0, sy = 0.0;
    int n = 0;
    for (int y = 0; y < p.sprite.height; ++y)
        for (int x = 0; x < p.sprite.width; ++x)
            if (p.sprite.inside(x, y)) {
                o.mask[static_cast<std::size_t>(p.y + y) * side + p.x + x] = 1;
                sx += p.x + x + 0.5;
                sy += p.y + y + 0.5;
                ++n;
            }
    o.cx = sx / n;
    o.cy = sy / n;
    return o;
}

} // namespace

SceneObject make_scene_object(const ObjectSpec& spec, const Placement& p, int side) { return scene_object(spec, p, side); }

Scene make_scene(int id, int cluster, int side, int max_objects, Rng& rng)
{
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Scene s;
    s.id = id;
    s.cluster = cluster;
    s.image = Image8(side, side, 3);
    const double base = 130 + 60 * u(rng);
    const std::array<double, 3> sky{base, base + 25 * u(rng), base + 15 + 35 * u(rng)};
    const double gb = 80 + 60 * u(rng);
    const std::array<double, 3> ground{gb + 20 * u(rng), gb + 25 * u(rng), gb - 10 * u(rng)};
    const double horizon = side * (0.45 + 0.25 * u(rng));
    const double tilt = (u(rng) - 0.5) * 0.2;
    for (int y = 0; y < side; ++y)
        for (int x = 0; x < side; ++x) {
            const double fy = (y + 0.5) / side;
            const double t = std::clamp((y + 0.5 - horizon) / 4.0 * 0.5 + 0.5, 0.0, 1.0);
            const double lift = 1.0 + tilt * ((x + 0.5) / side - 0.5);
            for (int c = 0; c < 3; ++c) {
                const double top = sky[static_cast<std::size_t>(c)] * (1.15 - 0.25 * fy);
                const double bottom = ground[static_cast<std::size_t>(c)] * (1.1 - 0.2 * fy);
                s.image.at(x, y, c) = static_cast<std::uint8_t>(std::clamp(std::lround(((1 - t) * top + t * bottom) * lift), 0L, 255L));
            }
        }
    std::vector<std::string> members;
    for (const auto& c : categories())
        if (cluster_of(c) == cluster) members.push_back(c);
    if (members.empty()) throw std::invalid_argument("make_scene: no drawable category in cluster " + std::to_string(cluster));
    const int n = std::uniform_int_distribution<int>(1, std::max(1, max_objects))(rng);
    for (int k = 0; k < n; ++k) {
        ObjectSpec spec{members[std::uniform_int_distribution<std::size_t>(0, members.size() - 1)(rng)],
                        colors()[std::uniform_int_distribution<std::size_t>(0, colors().size() - 1)(rng)],
                        textures()[std::uniform_int_distribution<std::size_t>(0, textures().size() - 1)(rng)]};
        const SizeClass size = u(rng) < 0.7 ? SizeClass::Medium : SizeClass::Large;
        auto p = place_object(spec, s, size, rng);
        if (!p) continue;
        auto [img, mask] = composite(s, *p);
        s.image = std::move(img);
        s.objects.push_back(scene_object(spec, *p, side));
    }
    return s;
}

} // namespace sahm::dataforge
