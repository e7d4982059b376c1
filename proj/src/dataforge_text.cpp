#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "sahm/dataforge.hpp"

namespace sahm::dataforge {

using textproc::Role;

namespace {

struct Slots {
    std::string category;
    std::string color;
    std::string texture;
    std::optional<std::string> horizontal;
    std::optional<std::string> vertical;
    Relation relation = Relation::None;
    std::string other; // category of the nearest neighbour
};

class Builder {
public:
    Builder& word(std::string_view w, Role r)
    {
        e_.tokens.emplace_back(w);
        e_.roles.push_back(r);
        return *this;
    }
    Builder& other(std::string_view w) { return word(w, Role::Outside); }
    // Multi-word phrase as one span: B-X then I-X.
    Builder& span(std::string_view phrase, bool identity)
    {
        bool first = true;
        for (const auto& t : textproc::normalize(phrase)) {
            word(t, identity ? (first ? Role::BeginIdentity : Role::InsideIdentity)
                             : (first ? Role::BeginAttribute : Role::InsideAttribute));
            first = false;
        }
        return *this;
    }
    Builder& identity(std::string_view phrase) { return span(phrase, true); }
    Builder& attribute(std::string_view phrase) { return span(phrase, false); }
    Expression done() { return std::move(e_); }

private:
    Expression e_;
};

bool is_vehicle(std::string_view c) { return c == "car" || c == "bus" || c == "truck" || c == "train"; }

std::optional<Description> render(int id, const Slots& s)
{
    Builder b;
    Constraint c;
    c.category = s.category;
    switch (id) {
    case 0: b.other("the").identity(s.category); break;
    case 1:
        b.other("the").attribute(s.color).identity(s.category);
        c.color = s.color;
        break;
    case 2:
        if (s.texture == "plain") return std::nullopt;
        b.attribute(s.color + " " + s.texture).identity(s.category);
        c.color = s.color;
        c.texture = s.texture;
        break;
    case 3:
        if (!s.horizontal) return std::nullopt;
        b.other("the").identity(s.category).other("on").other("the").attribute(*s.horizontal);
        c.horizontal = s.horizontal;
        break;
    case 4:
        if (!s.horizontal) return std::nullopt;
        b.other("the").attribute(s.color).identity(s.category).other("on").other("the").attribute(*s.horizontal);
        c.color = s.color;
        c.horizontal = s.horizontal;
        break;
    case 5:
        if (!s.vertical) return std::nullopt;
        b.identity(s.category).other("at").other("the").attribute(*s.vertical);
        c.vertical = s.vertical;
        break;
    case 6: {
        if (s.relation == Relation::None || s.other.empty()) return std::nullopt;
        const auto words = textproc::normalize(relation_phrase(s.relation));
        b.other("the").identity(s.category).attribute(words[0]);
        for (std::size_t i = 1; i < words.size(); ++i) b.other(words[i]);
        b.other("the").attribute(s.other);
        c.relation = s.relation;
        c.relation_category = s.other;
        break;
    }
    case 7:
        b.other("remove").other("the").attribute(s.color).identity(s.category);
        c.color = s.color;
        break;
    case 8:
        if (s.texture == "plain" || !s.vertical) return std::nullopt;
        b.attribute(s.texture).identity(s.category).other("at").other("the").attribute(*s.vertical);
        c.texture = s.texture;
        c.vertical = s.vertical;
        break;
    case 9:
        if (!is_vehicle(s.category)) return std::nullopt;
        b.identity(s.category).attribute("approaching").other("with").attribute("headlight on");
        break;
    case 10:
        if (s.other.empty()) return std::nullopt;
        b.other("the").attribute(s.color).identity(s.category).attribute("near").other("the").attribute(s.other);
        c.color = s.color;
        c.near_category = s.other;
        break;
    default: throw std::out_of_range("template id " + std::to_string(id));
    }
    return Description{b.done(), std::move(c), id};
}

template <class T>
const T& pick(const std::vector<T>& v, Rng& rng)
{
    return v[std::uniform_int_distribution<std::size_t>(0, v.size() - 1)(rng)];
}

} // namespace

std::string Expression::text() const
{
    std::string out;
    for (const auto& t : tokens) out += (out.empty() ? "" : " ") + t;
    return out;
}

std::string_view relation_phrase(Relation r)
{
    switch (r) {
    case Relation::LeftOf: return "left of";
    case Relation::RightOf: return "right of";
    case Relation::Above: return "above";
    case Relation::Below: return "below";
    case Relation::None: break;
    }
    return "";
}

SpatialFacts spatial_facts(const std::vector<SceneObject>& objects, std::size_t index, int side)
{
    const SceneObject& o = objects.at(index);
    SpatialFacts f;
    if (o.cx < side / 3.0) f.horizontal = "left";
    else if (o.cx > 2.0 * side / 3.0) f.horizontal = "right";
    if (o.cy < side / 3.0) f.vertical = "top";
    else if (o.cy > 2.0 * side / 3.0) f.vertical = "bottom";
    double best = INFINITY;
    for (std::size_t j = 0; j < objects.size(); ++j) {
        if (j == index) continue;
        const double d = std::hypot(objects[j].cx - o.cx, objects[j].cy - o.cy);
        if (d < best) {
            best = d;
            f.nearest = static_cast<int>(j);
        }
    }
    if (f.nearest >= 0) {
        const SceneObject& n = objects[static_cast<std::size_t>(f.nearest)];
        const double dx = n.cx - o.cx, dy = n.cy - o.cy;
        if (std::abs(dx) >= std::abs(dy)) f.relation = dx > 0 ? Relation::LeftOf : Relation::RightOf;
        else f.relation = dy > 0 ? Relation::Above : Relation::Below;
    }
    return f;
}

bool satisfies(const std::vector<SceneObject>& objects, std::size_t index, const Constraint& c, int side)
{
    const ObjectSpec& s = objects.at(index).spec;
    if (s.category != c.category) return false;
    if (c.color && s.color != *c.color) return false;
    if (c.texture && s.texture != *c.texture) return false;
    const SpatialFacts f = spatial_facts(objects, index, side);
    if (c.horizontal && f.horizontal != c.horizontal) return false;
    if (c.vertical && f.vertical != c.vertical) return false;
    const std::string nearest = f.nearest >= 0 ? objects[static_cast<std::size_t>(f.nearest)].spec.category : "";
    if (c.near_category && nearest != *c.near_category) return false;
    if (c.relation != Relation::None && (f.relation != c.relation || !c.relation_category || nearest != *c.relation_category))
        return false;
    return true;
}

int count_matches(const std::vector<SceneObject>& objects, const Constraint& c, int side)
{
    int n = 0;
    for (std::size_t i = 0; i < objects.size(); ++i) n += satisfies(objects, i, c, side);
    return n;
}

std::optional<Description> instantiate(int template_id, const std::vector<SceneObject>& objects, std::size_t index,
                                       int side)
{
    const SceneObject& o = objects.at(index);
    const SpatialFacts f = spatial_facts(objects, index, side);
    Slots s{o.spec.category, o.spec.color, o.spec.texture, f.horizontal, f.vertical, f.relation, ""};
    if (f.nearest >= 0) s.other = objects[static_cast<std::size_t>(f.nearest)].spec.category;
    return render(template_id, s);
}

std::vector<Description> describe(const std::vector<SceneObject>& objects, std::size_t index, int side, int count,
                                  Rng& rng)
{
    std::vector<int> order(kNumTemplates);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<Description> out;
    for (int id : order) {
        if (static_cast<int>(out.size()) >= count) break;
        auto d = instantiate(id, objects, index, side);
        if (!d || count_matches(objects, d->constraint, side) != 1) continue;
        const std::string text = d->expression.text();
        if (std::any_of(out.begin(), out.end(), [&](const Description& e) { return e.expression.text() == text; })) continue;
        out.push_back(std::move(*d));
    }
    return out;
}

std::vector<textproc::TaggedExample> template_corpus(int count, std::uint64_t seed)
{
    Rng rng(seed);
    static const std::vector<std::string> horizontal{"left", "right"}, vertical{"top", "bottom"};
    static const std::vector<Relation> relations{Relation::LeftOf, Relation::RightOf, Relation::Above, Relation::Below};
    std::vector<textproc::TaggedExample> out;
    while (static_cast<int>(out.size()) < count) {
        Slots s{pick(categories(), rng), pick(colors(), rng), pick(textures(), rng), pick(horizontal, rng),
                pick(vertical, rng), pick(relations, rng), pick(categories(), rng)};
        const int id = std::uniform_int_distribution<int>(0, kNumTemplates - 1)(rng);
        auto d = render(id, s);
        if (!d) continue;
        out.push_back({d->expression.tokens, d->expression.roles});
    }
    return out;
}

textproc::Vocabulary lexicon_vocabulary()
{
    std::vector<std::string> words{"the", "on", "at", "remove", "with", "near", "approaching", "headlight",
                                   "left", "right", "of", "above", "below", "top", "bottom"};
    auto add = [&](const std::vector<std::string>& phrases) {
        for (const auto& p : phrases)
            for (const auto& t : textproc::normalize(p)) words.push_back(t);
    };
    add(categories());
    add(colors());
    add(textures());
    return textproc::Vocabulary(std::move(words));
}

} // namespace sahm::dataforge
