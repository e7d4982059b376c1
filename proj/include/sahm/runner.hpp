#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "sahm/dataforge.hpp"
#include "sahm/evalkit.hpp"
#include "sahm/losses.hpp"
#include "sahm/model.hpp"
#include "sahm/optim.hpp"
#include "sahm/textproc.hpp"

namespace sahm::runner {

// ------------------------------------------------------------------ config

struct OptimConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.0;
    double decay = 0.98; // learning-rate factor applied once per epoch
};

struct TrainConfig {
    std::string profile = "desk";
    std::uint64_t seed = 1;
    ModelConfig model;
    losses::LossWeights weights;
    OptimConfig optim;
    int batch = 8;
    int steps = 1000;
    int epochs = 0; // > 0 overrides steps
    int max_pairs = 0; // > 0 keeps only the first pairs of the split
    bool augment = true;
    int crop_shift = 2;
    int checkpoint_every = 0;
    std::string disc_preset = "rf16";
    int disc_channels = 16;
    textproc::TaggerConfig tagger;
    textproc::TaggerTrainConfig tagger_train;
    int tagger_corpus = 3000;
    dataforge::GeneratorConfig generator;

    void validate() const;
};

/// 64 x 64 desk defaults.
TrainConfig desk_profile();
/// Full-scale reference settings (480 x 480, batch 32, 76 epochs).
TrainConfig paper_profile();
TrainConfig profile(const std::string& name);

/// YAML file: an optional `profile` key picks the base settings and every
/// other key overrides it.
TrainConfig load_config(const std::filesystem::path& path);
TrainConfig parse_config(const std::string& yaml_text);
std::string to_yaml(const TrainConfig& config);

/// FNV-1a over the canonical YAML form.
std::uint64_t config_hash(const TrainConfig& config);

// -------------------------------------------------------------- checkpoint

/// Named tensors and strings in one binary file.
struct Container {
    std::map<std::string, Tensor> tensors;
    std::map<std::string, std::string> strings;

    void save(const std::filesystem::path& path) const;
    static Container load(const std::filesystem::path& path);
    const std::string& string(const std::string& key) const;
    const Tensor& tensor(const std::string& key) const;
};

void store_params(Container& c, const std::string& prefix, const ParamSet& ps);
/// Throws when a parameter is missing or has another shape.
void restore_params(const Container& c, const std::string& prefix, ParamSet& ps);

// ----------------------------------------------------------------- session

struct Sample {
    Tensor image;      // composite, 3 x S x S
    Tensor background; // ground truth
    Tensor mask;       // 1 x S x S, 0 / 1
    std::vector<std::string> tokens;
};

struct StepReport {
    std::int64_t step = 0;
    int epoch = 0;
    double lr = 0.0;
    losses::LossReport loss;
    int identity_fallbacks = 0;
    int attribute_empty = 0;
};

class TrainingDiverged : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Prediction {
    Tensor mask_prob; // 1 x S x S
    Tensor mask;      // binary
    Tensor output;    // 3 x S x S
    std::vector<textproc::Role> roles;
    textproc::TokenizedExpression expr;
    bool identity_fallback = false;
    bool low_confidence = false;
};

/// Model, tagger, discriminator and optimizer state.
class Session {
public:
    Session(TrainConfig config, textproc::Vocabulary vocab);

    /// Trains the role tagger on the templated corpus; returns its final NLL.
    double train_tagger();

    std::vector<textproc::Role> tag(const textproc::TokenizedExpression& expr) const;

    /// One generator update followed by one discriminator update.
    StepReport train_step(const std::vector<Sample>& batch, double lr);

    Prediction predict(const Tensor& image, const std::vector<std::string>& tokens) const;

    void save(const std::filesystem::path& path) const;
    static std::unique_ptr<Session> load(const std::filesystem::path& path);

    Model& model() { return *model_; }
    const Model& model() const { return *model_; }
    const TrainConfig& config() const { return config_; }
    const textproc::Vocabulary& vocab() const { return vocab_; }
    std::int64_t step() const { return step_; }
    Rng& rng() { return rng_; }

private:
    TrainConfig config_;
    textproc::Vocabulary vocab_;
    std::unique_ptr<textproc::Tagger> tagger_;
    std::unique_ptr<Model> model_;
    std::unique_ptr<losses::PatchDiscriminator> disc_;
    AdamW gen_opt_;
    AdamW disc_opt_;
    Rng rng_;
    std::int64_t step_ = 0;
};

// ------------------------------------------------------------------- train

Sample load_sample(const dataforge::PairRecord& pair, std::size_t expression);

/// Horizontal flip with left/right words swapped, then a small translation.
Sample augment(const Sample& s, int max_shift, Rng& rng);

struct TrainSummary {
    std::vector<StepReport> trace;
    std::filesystem::path checkpoint;
    double tagger_nll = 0.0;
    double seconds = 0.0;
};

using StepCallback = std::function<void(const StepReport&)>;

/// Trains on the dataset's train split, writes log.jsonl and model.ckpt
/// into `out`. `on_step` observes every report.
TrainSummary train(const TrainConfig& config, const dataforge::Dataset& data, const std::filesystem::path& out,
                   const StepCallback& on_step = {});

// -------------------------------------------------------------- evaluation

struct PairMetrics {
    int id = 0;
    double psnr_full = 0.0;
    double psnr_hole = 0.0;
    double psnr_hole_baseline = 0.0; // composite against ground truth
    double ssim = 0.0;
    double iou = 0.0;
    bool low_confidence = false;
};

struct EvalReport {
    std::string split;
    std::vector<PairMetrics> pairs;
    double psnr_full = 0.0;
    double psnr_hole = 0.0;
    double psnr_hole_baseline = 0.0;
    double ssim = 0.0;
    double iou = 0.0;
    std::map<std::string, double> pr_at_k;
    double fid_proxy = 0.0;
    std::array<double, 3> head_importance{};
    evalkit::OverheadReport overhead;
};

EvalReport evaluate(const Session& session, const dataforge::Dataset& data, const std::string& split,
                    int timing_runs = 20);

/// JSON report at `path` plus a per-pair CSV next to it.
void write_report(const EvalReport& report, const std::filesystem::path& path);

/// Pooled final-stage encoder features used by the FID proxy.
std::vector<double> pooled_features(const Model& model, const Tensor& image);

// ------------------------------------------------------------------ remove

struct RemoveResult {
    std::filesystem::path mask_path;
    std::filesystem::path output_path;
    Prediction prediction;
};

RemoveResult remove_object(const Session& session, const std::filesystem::path& image, const std::string& expression,
                           const std::filesystem::path& out);

} // namespace sahm::runner
