#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "sahm/autograd.hpp"
#include "sahm/nn.hpp"
#include "sahm/optim.hpp"

namespace sahm::textproc {

/// Syntactic role label. The numeric order is also the Viterbi tie-break
/// order (lowest index wins).
enum class Role : int { BeginIdentity = 0, InsideIdentity = 1, BeginAttribute = 2, InsideAttribute = 3, Outside = 4 };
inline constexpr int kNumRoles = 5;

std::string_view role_name(Role r); // "B-IW", "I-IW", "B-AW", "I-AW", "O"
Role parse_role(std::string_view name);
inline bool is_identity(Role r) { return r == Role::BeginIdentity || r == Role::InsideIdentity; }
inline bool is_attribute(Role r) { return r == Role::BeginAttribute || r == Role::InsideAttribute; }

/// No I-X after O or after a span of a different kind; no leading I-X.
bool is_valid_bio(std::span<const Role> tags);

class Vocabulary {
public:
    static constexpr int kPad = 0;
    static constexpr int kUnknown = 1;
    static constexpr int kSpecials = 2;

    Vocabulary() = default;
    /// Sorts and deduplicates the tokens.
    explicit Vocabulary(std::vector<std::string> tokens);

    int id(std::string_view token) const;
    const std::string& token(int id) const;
    int size() const { return static_cast<int>(tokens_.size()) + kSpecials; }
    const std::vector<std::string>& tokens() const { return tokens_; }

    /// One token per line; line n (0-based) holds id n + kSpecials.
    void save(const std::filesystem::path& path) const;
    static Vocabulary load(const std::filesystem::path& path);
    std::string serialize() const;
    static Vocabulary deserialize(std::string_view text);

private:
    std::vector<std::string> tokens_;
    std::unordered_map<std::string, int> index_;
};

struct TokenizedExpression {
    std::vector<std::string> tokens;
    std::vector<int> ids;
    int length() const { return static_cast<int>(tokens.size()); }
};

/// Lowercases, deletes punctuation and splits on whitespace.
std::vector<std::string> normalize(std::string_view text);

/// Throws std::invalid_argument("empty expression") when nothing remains.
TokenizedExpression tokenize(std::string_view text, const Vocabulary& vocab);
TokenizedExpression from_tokens(std::vector<std::string> tokens, const Vocabulary& vocab);

/// Sum of emission scores along `path` plus transition scores between
/// consecutive labels.
double path_score(const Tensor& emissions, const Tensor& transitions, std::span<const Role> path);

/// Viterbi decoding over T x 5 emissions and a 5 x 5 transition matrix
/// (row = previous label). Ties go to the lowest label index.
std::vector<Role> crf_decode(const Tensor& emissions, const Tensor& transitions);

/// Transition matrix with BIO-invalid moves pushed to a large negative score.
Tensor constrain_transitions(const Tensor& transitions);

/// Negative log-likelihood of `gold` under the linear-chain CRF, with
/// forward-backward gradients for both inputs.
Var crf_nll(Var emissions, Var transitions, std::span<const Role> gold);

struct TaggerConfig {
    int embed_dim = 24;
    int hidden = 24;
};

struct TaggerTrainConfig {
    int epochs = 4;
    double lr = 5e-3;
    std::uint64_t seed = 1;
};

struct TaggedExample {
    std::vector<std::string> tokens;
    std::vector<Role> roles;
};

/// BiLSTM-CRF role tagger.
class Tagger {
public:
    Tagger(int vocab_size, TaggerConfig config, std::uint64_t seed);

    /// T x 5 emission scores.
    Var emissions(Graph& g, const TokenizedExpression& expr) const;
    Var nll(Graph& g, const TokenizedExpression& expr, std::span<const Role> gold) const;

    /// Constrained Viterbi decode; the result is always BIO-valid.
    std::vector<Role> tag(const TokenizedExpression& expr) const;

    /// Returns the mean training NLL of the final epoch.
    double train(std::span<const TaggedExample> corpus, const Vocabulary& vocab, const TaggerTrainConfig& config);

    ParamSet& params() { return params_; }
    const ParamSet& params() const { return params_; }
    const TaggerConfig& config() const { return config_; }
    int vocab_size() const { return vocab_size_; }

private:
    struct Direction {
        Parameter* weight; // 4H x (E + H)
        Parameter* bias;   // 4H
    };
    std::vector<Var> run_lstm(Graph& g, const std::vector<Var>& inputs, const Direction& dir) const;

    TaggerConfig config_;
    int vocab_size_;
    ParamSet params_;
    Parameter* embedding_;   // E x V
    Direction forward_, backward_;
    Parameter* emit_weight_; // 5 x 2H
    Parameter* emit_bias_;   // 5
    Parameter* transitions_; // 5 x 5
};

std::vector<Role> tag_roles(const TokenizedExpression& expr, const Tagger& tagger);

/// Token-level accuracy of the tagger on a labeled set.
double tagging_accuracy(const Tagger& tagger, std::span<const TaggedExample> examples, const Vocabulary& vocab);

/// The three text banks consumed by fusion. `attribute` is invalid when no
/// token is tagged AW.
struct SyntaxEmbeddings {
    Var full;      // C_L x T_L
    Var attribute; // C_L x T_aw
    Var identity;  // C_L x T_iw
    std::vector<int> attribute_columns;
    std::vector<int> identity_columns;
    bool identity_fallback = false;
    bool attribute_empty = false;
};

/// Column subsets of `full` selected by AW / IW spans, order-preserving.
/// With no identity word, `identity` is the single `fallback` column and
/// identity_fallback is set.
SyntaxEmbeddings extract_embeddings(Var full, std::span<const Role> tags, Var fallback);

/// Trainable stand-in text encoder: token embedding followed by a residual
/// width-3 convolution over the token axis.
class TextEncoder {
public:
    TextEncoder(ParamSet& ps, const std::string& name, int vocab_size, int dim, Rng& rng);

    Var encode(Graph& g, const TokenizedExpression& expr) const; // C_L x T_L
    Var fallback(Graph& g) const { return g.param(*fallback_); }
    int dim() const { return dim_; }

private:
    int dim_;
    int vocab_size_;
    Parameter* embedding_; // C_L x V
    nn::Conv context_;
    Parameter* fallback_;  // C_L x 1
};

} // namespace sahm::textproc
