#include "sahm/textproc.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "sahm/ops.hpp"

namespace sahm::textproc {

namespace {
constexpr std::array<std::string_view, kNumRoles> kRoleNames{"B-IW", "I-IW", "B-AW", "I-AW", "O"};
constexpr double kForbidden = -1e4;

bool may_follow(Role prev, Role next)
{
    switch (next) {
    case Role::InsideIdentity: return is_identity(prev);
    case Role::InsideAttribute: return is_attribute(prev);
    default: return true;
    }
}

bool may_start(Role r) { return r != Role::InsideIdentity && r != Role::InsideAttribute; }

double log_sum_exp(const double* v, int n)
{
    double m = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) m = std::max(m, v[i]);
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += std::exp(v[i] - m);
    return m + std::log(s);
}
} // namespace

std::string_view role_name(Role r) { return kRoleNames[static_cast<std::size_t>(r)]; }

Role parse_role(std::string_view name)
{
    for (int i = 0; i < kNumRoles; ++i)
        if (kRoleNames[static_cast<std::size_t>(i)] == name) return static_cast<Role>(i);
    throw std::invalid_argument("unknown role label: " + std::string(name));
}

bool is_valid_bio(std::span<const Role> tags)
{
    for (std::size_t t = 0; t < tags.size(); ++t) {
        if (t == 0 ? !may_start(tags[t]) : !may_follow(tags[t - 1], tags[t])) return false;
    }
    return true;
}

// ------------------------------------------------------------------ vocabulary

Vocabulary::Vocabulary(std::vector<std::string> tokens) : tokens_(std::move(tokens))
{
    std::sort(tokens_.begin(), tokens_.end());
    tokens_.erase(std::unique(tokens_.begin(), tokens_.end()), tokens_.end());
    tokens_.erase(std::remove(tokens_.begin(), tokens_.end(), std::string{}), tokens_.end());
    for (std::size_t i = 0; i < tokens_.size(); ++i) index_.emplace(tokens_[i], static_cast<int>(i) + kSpecials);
}

int Vocabulary::id(std::string_view token) const
{
    auto it = index_.find(std::string(token));
    return it == index_.end() ? kUnknown : it->second;
}

const std::string& Vocabulary::token(int id) const
{
    static const std::string pad = "<pad>", unk = "<unk>";
    if (id == kPad) return pad;
    if (id < kSpecials || id >= size()) return unk;
    return tokens_[static_cast<std::size_t>(id - kSpecials)];
}

std::string Vocabulary::serialize() const
{
    std::string out;
    for (const auto& t : tokens_) out += t + "\n";
    return out;
}

Vocabulary Vocabulary::deserialize(std::string_view text)
{
    std::vector<std::string> tokens;
    std::istringstream in{std::string(text)};
    for (std::string line; std::getline(in, line);)
        if (!line.empty()) tokens.push_back(line);
    return Vocabulary(std::move(tokens));
}

void Vocabulary::save(const std::filesystem::path& path) const
{
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write vocabulary: " + path.string());
    out << serialize();
}

Vocabulary Vocabulary::load(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read vocabulary: " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return deserialize(ss.str());
}

// ------------------------------------------------------------------- tokenize

std::vector<std::string> normalize(std::string_view text)
{
    std::vector<std::string> out;
    std::string cur;
    for (char ch : text) {
        const auto u = static_cast<unsigned char>(ch);
        if (std::isspace(u)) {
            if (!cur.empty()) out.push_back(std::move(cur));
            cur.clear();
        } else if (!std::ispunct(u)) {
            cur.push_back(static_cast<char>(std::tolower(u)));
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

TokenizedExpression from_tokens(std::vector<std::string> tokens, const Vocabulary& vocab)
{
    if (tokens.empty()) throw std::invalid_argument("empty expression");
    TokenizedExpression e;
    e.tokens = std::move(tokens);
    for (const auto& t : e.tokens) e.ids.push_back(vocab.id(t));
    return e;
}

TokenizedExpression tokenize(std::string_view text, const Vocabulary& vocab)
{
    return from_tokens(normalize(text), vocab);
}

// ------------------------------------------------------------------------ CRF

double path_score(const Tensor& emissions, const Tensor& transitions, std::span<const Role> path)
{
    double s = 0.0;
    for (std::size_t t = 0; t < path.size(); ++t) {
        const int y = static_cast<int>(path[t]);
        s += emissions(static_cast<int>(t), y);
        if (t > 0) s += transitions(static_cast<int>(path[t - 1]), y);
    }
    return s;
}

std::vector<Role> crf_decode(const Tensor& emissions, const Tensor& transitions)
{
    if (emissions.rank() != 2 || emissions.dim(1) != kNumRoles || emissions.dim(0) < 1)
        throw std::invalid_argument("crf_decode: emissions must be T x 5, got " + shape_str(emissions.shape()));
    if (transitions.shape() != Shape{kNumRoles, kNumRoles})
        throw std::invalid_argument("crf_decode: transitions must be 5 x 5, got " + shape_str(transitions.shape()));
    const int steps = emissions.dim(0);
    std::vector<std::array<double, kNumRoles>> score(static_cast<std::size_t>(steps));
    std::vector<std::array<int, kNumRoles>> back(static_cast<std::size_t>(steps));
    for (int j = 0; j < kNumRoles; ++j) score[0][static_cast<std::size_t>(j)] = emissions(0, j);
    for (int t = 1; t < steps; ++t) {
        for (int j = 0; j < kNumRoles; ++j) {
            int best = 0;
            double best_v = score[static_cast<std::size_t>(t - 1)][0] + transitions(0, j);
            for (int i = 1; i < kNumRoles; ++i) {
                const double v = score[static_cast<std::size_t>(t - 1)][static_cast<std::size_t>(i)] + transitions(i, j);
                if (v > best_v) {
                    best_v = v;
                    best = i;
                }
            }
            score[static_cast<std::size_t>(t)][static_cast<std::size_t>(j)] = best_v + emissions(t, j);
            back[static_cast<std::size_t>(t)][static_cast<std::size_t>(j)] = best;
        }
    }
    const auto& last = score.back();
    int y = static_cast<int>(std::max_element(last.begin(), last.end()) - last.begin());
    std::vector<Role> path(static_cast<std::size_t>(steps));
    for (int t = steps - 1; t >= 0; --t) {
        path[static_cast<std::size_t>(t)] = static_cast<Role>(y);
        if (t > 0) y = back[static_cast<std::size_t>(t)][static_cast<std::size_t>(y)];
    }
    return path;
}

Tensor constrain_transitions(const Tensor& transitions)
{
    Tensor out = transitions;
    for (int i = 0; i < kNumRoles; ++i)
        for (int j = 0; j < kNumRoles; ++j)
            if (!may_follow(static_cast<Role>(i), static_cast<Role>(j))) out(i, j) = kForbidden;
    return out;
}

Var crf_nll(Var emissions, Var transitions, std::span<const Role> gold)
{
    const Tensor& e = emissions.value();
    const Tensor& a = transitions.value();
    const int steps = e.dim(0);
    if (static_cast<int>(gold.size()) != steps)
        throw std::invalid_argument("crf_nll: gold length does not match emissions " + shape_str(e.shape()));
    constexpr int K = kNumRoles;
    Tensor alpha({steps, K}), beta({steps, K});
    double buf[K];
    for (int j = 0; j < K; ++j) alpha(0, j) = e(0, j);
    for (int t = 1; t < steps; ++t)
        for (int j = 0; j < K; ++j) {
            for (int i = 0; i < K; ++i) buf[i] = alpha(t - 1, i) + a(i, j);
            alpha(t, j) = log_sum_exp(buf, K) + e(t, j);
        }
    for (int i = 0; i < K; ++i) beta(steps - 1, i) = 0.0;
    for (int t = steps - 2; t >= 0; --t)
        for (int i = 0; i < K; ++i) {
            for (int j = 0; j < K; ++j) buf[j] = a(i, j) + e(t + 1, j) + beta(t + 1, j);
            beta(t, i) = log_sum_exp(buf, K);
        }
    for (int j = 0; j < K; ++j) buf[j] = alpha(steps - 1, j);
    const double log_z = log_sum_exp(buf, K);
    const double nll = log_z - path_score(e, a, gold);

    std::vector<Role> path(gold.begin(), gold.end());
    int ie = emissions.id(), ia = transitions.id();
    return emissions.graph().record(Tensor({1}, {nll}), {emissions, transitions},
                                    [ie, ia, steps, log_z, path, alpha = std::move(alpha), beta = std::move(beta)](Graph& g, int self) {
        const double gy = g.grad(self)[0];
        const Tensor& e = g.value(ie);
        const Tensor& a = g.value(ia);
        if (g.needs_grad(ie)) {
            Tensor& ge = g.grad(ie);
            for (int t = 0; t < steps; ++t)
                for (int j = 0; j < K; ++j) ge(t, j) += gy * std::exp(alpha(t, j) + beta(t, j) - log_z);
            for (int t = 0; t < steps; ++t) ge(t, static_cast<int>(path[static_cast<std::size_t>(t)])) -= gy;
        }
        if (g.needs_grad(ia)) {
            Tensor& ga = g.grad(ia);
            for (int t = 1; t < steps; ++t)
                for (int i = 0; i < K; ++i)
                    for (int j = 0; j < K; ++j)
                        ga(i, j) += gy * std::exp(alpha(t - 1, i) + a(i, j) + e(t, j) + beta(t, j) - log_z);
            for (int t = 1; t < steps; ++t)
                ga(static_cast<int>(path[static_cast<std::size_t>(t - 1)]), static_cast<int>(path[static_cast<std::size_t>(t)])) -= gy;
        }
    });
}

// --------------------------------------------------------------------- tagger

Tagger::Tagger(int vocab_size, TaggerConfig config, std::uint64_t seed) : config_(config), vocab_size_(vocab_size)
{
    Rng rng(seed);
    const int E = config.embed_dim, H = config.hidden;
    embedding_ = &params_.add("tagger.embedding", normal_tensor({E, vocab_size}, 0.5, rng));
    const double s = 1.0 / std::sqrt(static_cast<double>(E + H));
    forward_ = {&params_.add("tagger.fw.weight", normal_tensor({4 * H, E + H}, s, rng)),
                &params_.add("tagger.fw.bias", Tensor({4 * H, 1}), false)};
    backward_ = {&params_.add("tagger.bw.weight", normal_tensor({4 * H, E + H}, s, rng)),
                 &params_.add("tagger.bw.bias", Tensor({4 * H, 1}), false)};
    // forget-gate bias 1
    for (int i = H; i < 2 * H; ++i) {
        forward_.bias->value[static_cast<std::size_t>(i)] = 1.0;
        backward_.bias->value[static_cast<std::size_t>(i)] = 1.0;
    }
    emit_weight_ = &params_.add("tagger.emit.weight", normal_tensor({kNumRoles, 2 * H}, 1.0 / std::sqrt(2.0 * H), rng));
    emit_bias_ = &params_.add("tagger.emit.bias", Tensor({kNumRoles, 1}), false);
    transitions_ = &params_.add("tagger.transitions", Tensor({kNumRoles, kNumRoles}), false);
}

std::vector<Var> Tagger::run_lstm(Graph& g, const std::vector<Var>& inputs, const Direction& dir) const
{
    const int H = config_.hidden;
    Var w = g.param(*dir.weight), b = g.param(*dir.bias);
    Var h = g.constant(Tensor({H, 1}));
    Var c = g.constant(Tensor({H, 1}));
    std::vector<Var> outs;
    outs.reserve(inputs.size());
    for (const Var& x : inputs) {
        Var z = ops::add(ops::matmul(w, ops::concat({x, h})), b);
        Var in_gate = ops::sigmoid(ops::slice_rows(z, 0, H));
        Var forget = ops::sigmoid(ops::slice_rows(z, H, 2 * H));
        Var cell = ops::tanh(ops::slice_rows(z, 2 * H, 3 * H));
        Var out_gate = ops::sigmoid(ops::slice_rows(z, 3 * H, 4 * H));
        c = ops::add(ops::mul(forget, c), ops::mul(in_gate, cell));
        h = ops::mul(out_gate, ops::tanh(c));
        outs.push_back(h);
    }
    return outs;
}

Var Tagger::emissions(Graph& g, const TokenizedExpression& expr) const
{
    const int steps = expr.length();
    if (steps < 1) throw std::invalid_argument("empty expression");
    Var emb = ops::gather_columns(g.param(*embedding_), [&] {
        std::vector<int> ids = expr.ids;
        for (int& id : ids)
            if (id < 0 || id >= vocab_size_) id = Vocabulary::kUnknown;
        return ids;
    }());
    std::vector<Var> xs;
    for (int t = 0; t < steps; ++t) xs.push_back(ops::gather_columns(emb, {t}));
    std::vector<Var> fw = run_lstm(g, xs, forward_);
    std::vector<Var> rev(xs.rbegin(), xs.rend());
    std::vector<Var> bw = run_lstm(g, rev, backward_);
    std::reverse(bw.begin(), bw.end());
    Var we = g.param(*emit_weight_), be = g.param(*emit_bias_);
    std::vector<Var> rows;
    for (int t = 0; t < steps; ++t)
        rows.push_back(ops::add(ops::matmul(we, ops::concat({fw[static_cast<std::size_t>(t)], bw[static_cast<std::size_t>(t)]})), be));
    return ops::reshape(ops::concat(rows), {steps, kNumRoles});
}

Var Tagger::nll(Graph& g, const TokenizedExpression& expr, std::span<const Role> gold) const
{
    return crf_nll(emissions(g, expr), g.param(*transitions_), gold);
}

std::vector<Role> Tagger::tag(const TokenizedExpression& expr) const
{
    Graph g;
    Tensor e = emissions(g, expr).value();
    for (int j = 0; j < kNumRoles; ++j)
        if (!may_start(static_cast<Role>(j))) e(0, j) += kForbidden;
    return crf_decode(e, constrain_transitions(transitions_->value));
}

double Tagger::train(std::span<const TaggedExample> corpus, const Vocabulary& vocab, const TaggerTrainConfig& config)
{
    if (corpus.empty()) throw std::invalid_argument("tagger corpus is empty");
    AdamW opt({config.lr, 0.9, 0.999, 1e-8, 0.0});
    Rng rng(config.seed);
    std::vector<std::size_t> order(corpus.size());
    std::iota(order.begin(), order.end(), 0);
    constexpr std::size_t kBatch = 16;
    double last_epoch = 0.0;
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double total = 0.0;
        for (std::size_t start = 0; start < order.size(); start += kBatch) {
            const std::size_t stop = std::min(order.size(), start + kBatch);
            for (std::size_t k = start; k < stop; ++k) {
                const TaggedExample& ex = corpus[order[k]];
                Graph g;
                Var loss = ops::scale(nll(g, from_tokens(ex.tokens, vocab), ex.roles), 1.0 / static_cast<double>(stop - start));
                total += loss.value()[0] * static_cast<double>(stop - start);
                g.backward(loss);
                g.accumulate_parameter_grads();
            }
            opt.step(params_);
        }
        last_epoch = total / static_cast<double>(corpus.size());
    }
    return last_epoch;
}

std::vector<Role> tag_roles(const TokenizedExpression& expr, const Tagger& tagger) { return tagger.tag(expr); }

double tagging_accuracy(const Tagger& tagger, std::span<const TaggedExample> examples, const Vocabulary& vocab)
{
    std::size_t right = 0, total = 0;
    for (const auto& ex : examples) {
        const auto tags = tagger.tag(from_tokens(ex.tokens, vocab));
        for (std::size_t t = 0; t < tags.size(); ++t) right += tags[t] == ex.roles[t];
        total += tags.size();
    }
    return total ? static_cast<double>(right) / static_cast<double>(total) : 0.0;
}

// ----------------------------------------------------------------- embeddings

SyntaxEmbeddings extract_embeddings(Var full, std::span<const Role> tags, Var fallback)
{
    if (full.value().rank() != 2 || full.dim(1) != static_cast<int>(tags.size()))
        throw std::invalid_argument("extract_embeddings: " + std::to_string(tags.size()) + " tags for text matrix " +
                                    shape_str(full.shape()));
    if (!is_valid_bio(tags)) throw std::invalid_argument("extract_embeddings: tags are not a valid BIO sequence");
    SyntaxEmbeddings s;
    s.full = full;
    for (std::size_t t = 0; t < tags.size(); ++t) {
        if (is_attribute(tags[t])) s.attribute_columns.push_back(static_cast<int>(t));
        if (is_identity(tags[t])) s.identity_columns.push_back(static_cast<int>(t));
    }
    if (!s.attribute_columns.empty()) s.attribute = ops::gather_columns(full, s.attribute_columns);
    else s.attribute_empty = true;
    if (!s.identity_columns.empty()) {
        s.identity = ops::gather_columns(full, s.identity_columns);
    } else {
        if (fallback.value().shape() != Shape{full.dim(0), 1})
            throw std::invalid_argument("extract_embeddings: fallback column must be " + shape_str({full.dim(0), 1}));
        s.identity = fallback;
        s.identity_fallback = true;
    }
    return s;
}

TextEncoder::TextEncoder(ParamSet& ps, const std::string& name, int vocab_size, int dim, Rng& rng)
    : dim_(dim), vocab_size_(vocab_size)
{
    embedding_ = &ps.add(name + ".embedding", normal_tensor({dim, vocab_size}, 1.0, rng));
    context_.weight = &ps.add(name + ".context.weight", normal_tensor({dim, dim, 1, 3}, std::sqrt(1.0 / (3.0 * dim)), rng));
    context_.bias = &ps.add(name + ".context.bias", Tensor({dim}), false);
    context_.spec = {1, 0, 1, 1};
    fallback_ = &ps.add(name + ".fallback", normal_tensor({dim, 1}, 1.0, rng));
}

Var TextEncoder::encode(Graph& g, const TokenizedExpression& expr) const
{
    const int steps = expr.length();
    if (steps < 1) throw std::invalid_argument("empty expression");
    std::vector<int> ids = expr.ids;
    for (int& id : ids)
        if (id < 0 || id >= vocab_size_) id = Vocabulary::kUnknown;
    Var emb = ops::gather_columns(g.param(*embedding_), ids);
    Var ctx = ops::tanh(context_(g, ops::reshape(emb, {dim_, 1, steps})));
    return ops::add(emb, ops::reshape(ctx, {dim_, steps}));
}

} // namespace sahm::textproc
