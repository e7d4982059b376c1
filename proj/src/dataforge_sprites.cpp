#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <stdexcept>

#include "sahm/dataforge.hpp"

namespace sahm::dataforge {

namespace {

struct ClusterEntry {
    const char* name;
    std::vector<std::string> members;
};

const std::vector<ClusterEntry>& cluster_table()
{
    static const std::vector<ClusterEntry> table{
        {"person", {"person"}},
        {"traffic_p", {"bicycle", "car", "motorcycle", "bus", "truck"}},
        {"airplane", {"airplane"}},
        {"train", {"train"}},
        {"boat", {"boat"}},
        {"municipal engineering", {"traffic light", "fire hydrant", "stop sign", "parking meter", "bench"}},
        {"animal", {"bird", "cat", "dog", "horse", "sheep", "cow", "elephant", "bear", "zebra", "giraffe"}},
        {"belongings", {"backpack", "umbrella", "handbag", "tie", "suitcase"}},
        {"sport_p", {"frisbee", "sports ball", "kite", "baseball bat", "baseball glove", "skateboard", "tennis racket"}},
        {"snow sports", {"skis", "snowboard"}},
        {"surfboard", {"surfboard"}},
        {"tableware", {"bottle", "wine glass", "cup", "fork", "knife", "spoon", "bowl"}},
        {"natural foods", {"banana", "apple", "sandwich", "orange", "broccoli", "carrot"}},
        {"processed foods", {"hot dog", "pizza", "donut", "cake"}},
        {"large furniture", {"chair", "couch", "bed", "dining table", "toilet", "refrigerator"}},
        {"middle furniture", {"tv", "microwave", "oven", "toaster", "sink"}},
        {"miniature furniture",
         {"potted plant", "laptop", "mouse", "remote", "keyboard", "cell phone", "book", "clock", "vase", "scissors",
          "teddy bear", "hair drier", "toothbrush"}},
    };
    return table;
}

// Geometric toys share the cluster of small sport objects.
constexpr int kShapeCluster = 8;
const std::vector<std::string> kShapes{"circle", "square", "triangle", "star"};

// ------------------------------------------------------------ silhouettes

enum class Paint { Main, Dark, Light, Black, White, Leaf, Erase };

struct Part {
    enum Kind { Ellipse, Rect, Polygon } kind;
    std::vector<double> v; // ellipse: cx cy rx ry; rect: x0 y0 x1 y1; polygon: x y pairs
    Paint paint;

    bool contains(double u, double w) const
    {
        switch (kind) {
        case Ellipse: {
            const double a = (u - v[0]) / v[2], b = (w - v[1]) / v[3];
            return a * a + b * b <= 1.0;
        }
        case Rect: return u >= v[0] && u <= v[2] && w >= v[1] && w <= v[3];
        case Polygon: {
            bool in = false;
            const std::size_t n = v.size() / 2;
            for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
                const double xi = v[2 * i], yi = v[2 * i + 1], xj = v[2 * j], yj = v[2 * j + 1];
                if ((yi > w) != (yj > w) && u < (xj - xi) * (w - yi) / (yj - yi) + xi) in = !in;
            }
            return in;
        }
        }
        return false;
    }
};

struct Design {
    double aspect; // width / height
    std::vector<Part> parts;
};

Part ell(double cx, double cy, double rx, double ry, Paint p = Paint::Main) { return {Part::Ellipse, {cx, cy, rx, ry}, p}; }
Part rect(double x0, double y0, double x1, double y1, Paint p = Paint::Main) { return {Part::Rect, {x0, y0, x1, y1}, p}; }
Part poly(std::vector<double> pts, Paint p = Paint::Main) { return {Part::Polygon, std::move(pts), p}; }

std::vector<double> regular(int n, double cx, double cy, double r, double phase, double inner = 0.0)
{
    std::vector<double> pts;
    const int count = inner > 0.0 ? 2 * n : n;
    for (int i = 0; i < count; ++i) {
        const double radius = inner > 0.0 && i % 2 ? inner : r;
        const double a = phase + 2.0 * std::numbers::pi * i / count;
        pts.push_back(cx + radius * std::cos(a));
        pts.push_back(cy + radius * std::sin(a));
    }
    return pts;
}

std::vector<double> lower_half_ellipse(double cx, double cy, double rx, double ry)
{
    std::vector<double> pts;
    for (int i = 0; i <= 16; ++i) {
        const double a = std::numbers::pi * i / 16.0;
        pts.push_back(cx + rx * std::cos(a));
        pts.push_back(cy + ry * std::sin(a));
    }
    return pts;
}

const std::map<std::string, Design, std::less<>>& designs()
{
    using P = Paint;
    static const std::map<std::string, Design, std::less<>> d{
        {"circle", {1.0, {ell(.5, .5, .5, .5)}}},
        {"square", {1.0, {rect(0, 0, 1, 1)}}},
        {"triangle", {1.0, {poly({.5, 0, 1, 1, 0, 1})}}},
        {"star", {1.0, {poly(regular(5, .5, .55, .5, -std::numbers::pi / 2, .22))}}},
        {"car", {2.0, {rect(0, .35, 1, .8), poly({.2, .36, .3, .05, .7, .05, .8, .36}),
                       rect(.36, .12, .64, .33, P::Light), ell(.22, .8, .12, .2, P::Black), ell(.78, .8, .12, .2, P::Black)}}},
        {"bus", {2.4, {rect(0, .05, 1, .82), rect(.05, .15, .3, .4, P::Light), rect(.37, .15, .62, .4, P::Light),
                       rect(.69, .15, .94, .4, P::Light), ell(.2, .82, .08, .18, P::Black), ell(.8, .82, .08, .18, P::Black)}}},
        {"truck", {2.0, {rect(0, .05, .64, .8), rect(.66, .3, 1, .8, P::Dark), rect(.75, .36, .95, .55, P::Light),
                         ell(.2, .82, .1, .18, P::Black), ell(.82, .82, .1, .18, P::Black)}}},
        {"train", {2.6, {rect(0, .1, .9, .85), poly({.9, .1, 1, .4, 1, .85, .9, .85}), rect(.08, .2, .3, .45, P::Light),
                         rect(.4, .2, .62, .45, P::Light), ell(.95, .62, .04, .1, P::White), rect(0, .85, 1, .95, P::Black)}}},
        {"airplane", {2.0, {ell(.5, .5, .5, .13), poly({.35, .5, .58, .5, .45, .98}, P::Dark),
                            poly({.35, .5, .58, .5, .45, .02}, P::Dark), poly({0, .5, .1, .15, .16, .5}, P::Dark)}}},
        {"boat", {1.6, {poly({0, .62, 1, .62, .84, 1, .16, 1}), rect(.47, .04, .52, .62, P::Black),
                        poly({.52, .06, .52, .56, .86, .56}, P::White)}}},
        {"stop sign", {0.7, {poly(regular(8, .5, .36, .5, std::numbers::pi / 8)), rect(.2, .3, .8, .42, P::White),
                             rect(.45, .7, .55, 1, P::Black)}}},
        {"bench", {2.0, {rect(0, .1, 1, .26), rect(0, .42, 1, .56), rect(.06, .26, .12, 1, P::Dark),
                         rect(.88, .26, .94, 1, P::Dark)}}},
        {"bird", {1.3, {ell(.45, .58, .34, .26), ell(.76, .34, .16, .18), poly({.9, .28, 1, .36, .9, .42}, P::Black),
                        poly({0, .38, .18, .52, 0, .72}, P::Dark), ell(.45, .55, .16, .1, P::Dark)}}},
        {"cat", {1.2, {ell(.42, .7, .34, .26), ell(.74, .34, .2, .2), poly({.58, .22, .6, 0, .72, .16}),
                       poly({.78, .16, .9, 0, .92, .22}), rect(0, .4, .1, .72, P::Dark)}}},
        {"umbrella", {1.2, {poly({0, .45, .1, .2, .3, .05, .5, 0, .7, .05, .9, .2, 1, .45}),
                            rect(.47, .45, .53, .92, P::Black), rect(.3, .88, .53, .96, P::Black)}}},
        {"suitcase", {1.2, {rect(0, .2, 1, 1), rect(.3, 0, .7, .07, P::Black), rect(.3, 0, .36, .2, P::Black),
                            rect(.64, 0, .7, .2, P::Black), rect(.48, .25, .52, .95, P::Dark)}}},
        {"kite", {0.8, {poly({.5, 0, 1, .4, .5, 1, 0, .4}), rect(.48, 0, .52, 1, P::Dark), rect(0, .38, 1, .42, P::Dark)}}},
        {"sports ball", {1.0, {ell(.5, .5, .5, .5), ell(.5, .5, .5, .1, P::White)}}},
        {"frisbee", {2.0, {ell(.5, .5, .5, .32), ell(.5, .5, .3, .16, P::Light)}}},
        {"surfboard", {3.0, {ell(.5, .5, .5, .42), rect(.1, .45, .9, .55, P::White)}}},
        {"cup", {1.2, {rect(.05, .15, .72, 1), ell(.76, .55, .2, .26), ell(.76, .55, .1, .14, P::Erase),
                       rect(.05, .15, .72, .25, P::Light)}}},
        {"bottle", {0.45, {rect(.1, .38, .9, 1), poly({.1, .38, .35, .18, .65, .18, .9, .38}), rect(.35, .06, .65, .2),
                           rect(.3, 0, .7, .08, P::Black), rect(.1, .55, .9, .75, P::Light)}}},
        {"bowl", {2.0, {poly(lower_half_ellipse(.5, .22, .5, .78)), rect(0, .12, 1, .24, P::Light)}}},
        {"apple", {1.0, {ell(.5, .58, .48, .42), rect(.47, 0, .53, .18, P::Black), ell(.66, .1, .14, .07, P::Leaf)}}},
        {"orange", {1.0, {ell(.5, .52, .48, .48), ell(.5, .06, .1, .06, P::Leaf)}}},
        {"donut", {1.4, {ell(.5, .5, .5, .48), ell(.5, .48, .4, .36, P::Light), ell(.5, .5, .16, .14, P::Erase)}}},
        {"cake", {1.2, {rect(0, .4, 1, 1), rect(0, .3, 1, .45, P::Light), rect(.47, 0, .53, .3, P::White),
                        rect(0, .68, 1, .74, P::Dark)}}},
        {"chair", {0.8, {rect(.1, 0, .26, .55), rect(.1, .48, .9, .62), rect(.12, .62, .2, 1, P::Dark),
                         rect(.8, .62, .88, 1, P::Dark)}}},
        {"dining table", {2.0, {rect(0, .15, 1, .32), rect(.06, .32, .14, 1, P::Dark), rect(.86, .32, .94, 1, P::Dark)}}},
        {"tv", {1.4, {rect(0, 0, 1, .82, P::Black), rect(.07, .08, .93, .74), rect(.4, .82, .6, 1, P::Black)}}},
        {"book", {0.75, {rect(0, 0, 1, 1), rect(.84, .04, 1, .96, P::White), rect(0, 0, .12, 1, P::Dark)}}},
        {"clock", {1.0, {ell(.5, .5, .5, .5), ell(.5, .5, .38, .38, P::White), rect(.47, .2, .53, .52, P::Black),
                         rect(.47, .47, .76, .53, P::Black)}}},
        {"vase", {0.6, {ell(.5, .64, .5, .36), rect(.3, .06, .7, .4), rect(.2, 0, .8, .08, P::Dark)}}},
    };
    return d;
}

const Design& design_of(std::string_view category)
{
    auto it = designs().find(category);
    if (it == designs().end()) throw std::invalid_argument("no sprite for category '" + std::string(category) + "'");
    return it->second;
}

std::array<std::uint8_t, 3> shade(std::array<std::uint8_t, 3> c, double f)
{
    return {static_cast<std::uint8_t>(c[0] * f), static_cast<std::uint8_t>(c[1] * f), static_cast<std::uint8_t>(c[2] * f)};
}

std::array<std::uint8_t, 3> tint(std::array<std::uint8_t, 3> c)
{
    auto mix = [](std::uint8_t v) { return static_cast<std::uint8_t>((v + 255) / 2); };
    return {mix(c[0]), mix(c[1]), mix(c[2])};
}

bool texture_on(std::string_view texture, int x, int y, int period)
{
    if (texture == "striped") return ((x + y) / period) % 2 == 1;
    if (texture == "checkered") return ((x / period) + (y / period)) % 2 == 1;
    if (texture == "dotted") {
        const int px = x % (2 * period), py = y % (2 * period);
        return px >= period / 2 && px < period / 2 + std::max(1, period / 2 + 1) && py >= period / 2 &&
               py < period / 2 + std::max(1, period / 2 + 1);
    }
    return false;
}

} // namespace

const std::vector<std::string>& detection_categories()
{
    static const std::vector<std::string> all = [] {
        std::vector<std::string> v;
        for (const auto& c : cluster_table()) v.insert(v.end(), c.members.begin(), c.members.end());
        return v;
    }();
    return all;
}

std::string_view cluster_name(int cluster)
{
    if (cluster < 0 || cluster >= kNumClusters) throw std::out_of_range("cluster id " + std::to_string(cluster));
    return cluster_table()[static_cast<std::size_t>(cluster)].name;
}

int cluster_of(std::string_view category)
{
    const auto& t = cluster_table();
    for (std::size_t i = 0; i < t.size(); ++i)
        if (std::find(t[i].members.begin(), t[i].members.end(), category) != t[i].members.end()) return static_cast<int>(i);
    if (std::find(kShapes.begin(), kShapes.end(), category) != kShapes.end()) return kShapeCluster;
    throw std::invalid_argument("unknown category '" + std::string(category) + "'");
}

const std::vector<std::string>& categories()
{
    static const std::vector<std::string> v = [] {
        std::vector<std::string> out;
        for (const auto& [name, _] : designs()) out.push_back(name);
        return out;
    }();
    return v;
}

const std::vector<std::string>& colors()
{
    static const std::vector<std::string> v{"red", "green", "blue", "yellow", "purple", "pink", "cyan"};
    return v;
}

const std::vector<std::string>& textures()
{
    static const std::vector<std::string> v{"plain", "striped", "dotted", "checkered"};
    return v;
}

std::array<std::uint8_t, 3> color_rgb(std::string_view color)
{
    static const std::map<std::string, std::array<std::uint8_t, 3>, std::less<>> table{
        {"red", {220, 30, 30}},    {"green", {40, 180, 50}},  {"blue", {40, 70, 220}},  {"yellow", {235, 215, 30}},
        {"purple", {140, 50, 190}}, {"pink", {240, 120, 190}}, {"cyan", {30, 200, 210}},
    };
    auto it = table.find(color);
    if (it == table.end()) throw std::invalid_argument("unknown color '" + std::string(color) + "'");
    return it->second;
}

std::set<std::string> ObjectSpec::tokens() const
{
    std::set<std::string> out;
    for (const auto& t : textproc::normalize(color + " " + texture + " " + category)) out.insert(t);
    return out;
}

int Sprite::area() const { return static_cast<int>(std::count(alpha.begin(), alpha.end(), std::uint8_t{1})); }

double fill_ratio(std::string_view category)
{
    static std::map<std::string, double, std::less<>> cache;
    if (auto it = cache.find(category); it != cache.end()) return it->second;
    ObjectSpec probe{std::string(category), "red", "plain"};
    const Sprite s = render_sprite(probe, 64.0);
    const double r = static_cast<double>(s.area()) / (static_cast<double>(s.width) * s.height);
    cache.emplace(std::string(category), r);
    return r;
}

Sprite render_sprite(const ObjectSpec& spec, double side)
{
    const Design& d = design_of(spec.category);
    const auto main = color_rgb(spec.color);
    const double root = std::sqrt(d.aspect);
    Sprite s;
    s.width = std::max(1, static_cast<int>(std::lround(side * root)));
    s.height = std::max(1, static_cast<int>(std::lround(side / root)));
    s.rgb.assign(static_cast<std::size_t>(s.width) * s.height * 3, 0);
    s.alpha.assign(static_cast<std::size_t>(s.width) * s.height, 0);
    const int period = std::max(2, std::min(s.width, s.height) / 5);
    for (int y = 0; y < s.height; ++y)
        for (int x = 0; x < s.width; ++x) {
            const double u = (x + 0.5) / s.width, w = (y + 0.5) / s.height;
            const Part* top = nullptr;
            for (const auto& p : d.parts)
                if (p.contains(u, w)) top = &p;
            if (!top) continue;
            const std::size_t i = static_cast<std::size_t>(y) * s.width + x;
            std::array<std::uint8_t, 3> c{};
            switch (top->paint) {
            case Paint::Erase: continue;
            case Paint::Main: c = texture_on(spec.texture, x, y, period) ? shade(main, 0.55) : main; break;
            case Paint::Dark: c = shade(main, 0.6); break;
            case Paint::Light: c = tint(main); break;
            case Paint::Black: c = {35, 35, 35}; break;
            case Paint::White: c = {240, 240, 240}; break;
            case Paint::Leaf: c = {50, 140, 40}; break;
            }
            s.alpha[i] = 1;
            for (int k = 0; k < 3; ++k) s.rgb[i * 3 + static_cast<std::size_t>(k)] = c[static_cast<std::size_t>(k)];
        }
    return s;
}

} // namespace sahm::dataforge
