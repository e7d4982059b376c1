#include <fstream>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "sahm/runner.hpp"

namespace sahm::runner {

namespace {

template <class T>
void read(const YAML::Node& node, const char* key, T& value)
{
    if (node && node[key]) value = node[key].as<T>();
}

void require(bool ok, const std::string& what)
{
    if (!ok) throw std::invalid_argument("config: " + what);
}

} // namespace

void TrainConfig::validate() const
{
    model.validate();
    require(optim.lr > 0.0, "optimizer.lr must be positive");
    require(optim.beta1 >= 0.0 && optim.beta1 < 1.0 && optim.beta2 >= 0.0 && optim.beta2 < 1.0,
            "optimizer betas must lie in [0, 1)");
    require(optim.eps > 0.0, "optimizer.eps must be positive");
    require(optim.weight_decay >= 0.0, "optimizer.weight_decay must be non-negative");
    require(optim.decay > 0.0 && optim.decay <= 1.0, "optimizer.decay must lie in (0, 1]");
    require(weights.rec >= 0.0 && weights.adv >= 0.0, "loss weights must be non-negative");
    require(batch >= 1, "train.batch must be >= 1");
    require(steps >= 1 || epochs >= 1, "train.steps or train.epochs must be >= 1");
    require(crop_shift >= 0, "train.crop_shift must be >= 0");
    require(disc_channels >= 1, "discriminator.channels must be >= 1");
    require(disc_preset == "rf16" || disc_preset == "small", "discriminator.preset must be rf16 or small");
    require(tagger_corpus >= 1 && tagger_train.epochs >= 1, "tagger corpus and epochs must be >= 1");
}

TrainConfig desk_profile() { return TrainConfig{}; }

TrainConfig paper_profile()
{
    TrainConfig c;
    c.profile = "paper-480";
    c.model.encoder.input_side = 480;
    c.model.encoder.patch = 4;
    c.model.encoder.window = 6;
    c.optim.lr = 0.0006;
    c.optim.beta1 = 0.85;
    c.optim.beta2 = 0.91;
    c.optim.weight_decay = 0.005;
    c.batch = 32;
    c.epochs = 76;
    c.generator.side = 480;
    return c;
}

TrainConfig profile(const std::string& name)
{
    if (name == "desk") return desk_profile();
    if (name == "paper-480") return paper_profile();
    throw std::invalid_argument("config: unknown profile '" + name + "' (expected desk or paper-480)");
}

TrainConfig parse_config(const std::string& text)
{
    YAML::Node root = YAML::Load(text);
    std::string name = "desk";
    read(root, "profile", name);
    TrainConfig c = profile(name);
    read(root, "seed", c.seed);
    if (auto m = root["model"]) {
        read(m, "input_side", c.model.encoder.input_side);
        read(m, "patch", c.model.encoder.patch);
        read(m, "base_channels", c.model.encoder.base_channels);
        read(m, "blocks_per_stage", c.model.encoder.blocks_per_stage);
        read(m, "window", c.model.encoder.window);
        read(m, "text_dim", c.model.text_dim);
        read(m, "fill_patch", c.model.patch);
        read(m, "theta", c.model.theta);
        read(m, "bottleneck_blocks", c.model.bottleneck_blocks);
        read(m, "residual_blocks", c.model.residual_blocks);
        read(m, "refine_hidden", c.model.refine_hidden);
    }
    if (auto l = root["loss"]) {
        read(l, "rec", c.weights.rec);
        read(l, "adv", c.weights.adv);
    }
    if (auto o = root["optimizer"]) {
        read(o, "lr", c.optim.lr);
        read(o, "beta1", c.optim.beta1);
        read(o, "beta2", c.optim.beta2);
        read(o, "eps", c.optim.eps);
        read(o, "weight_decay", c.optim.weight_decay);
        read(o, "decay", c.optim.decay);
    }
    if (auto t = root["train"]) {
        read(t, "batch", c.batch);
        read(t, "steps", c.steps);
        read(t, "epochs", c.epochs);
        read(t, "max_pairs", c.max_pairs);
        read(t, "augment", c.augment);
        read(t, "crop_shift", c.crop_shift);
        read(t, "checkpoint_every", c.checkpoint_every);
    }
    if (auto d = root["discriminator"]) {
        read(d, "preset", c.disc_preset);
        read(d, "channels", c.disc_channels);
    }
    if (auto t = root["tagger"]) {
        read(t, "embed_dim", c.tagger.embed_dim);
        read(t, "hidden", c.tagger.hidden);
        read(t, "epochs", c.tagger_train.epochs);
        read(t, "lr", c.tagger_train.lr);
        read(t, "seed", c.tagger_train.seed);
        read(t, "corpus", c.tagger_corpus);
    }
    if (auto g = root["generator"]) {
        read(g, "pairs", c.generator.pairs);
        read(g, "side", c.generator.side);
        read(g, "scenes_per_cluster", c.generator.scenes_per_cluster);
        read(g, "max_background_objects", c.generator.max_background_objects);
        read(g, "expressions_per_pair", c.generator.expressions_per_pair);
        read(g, "match_k", c.generator.match_k);
        read(g, "train_fraction", c.generator.train_fraction);
        read(g, "val_fraction", c.generator.val_fraction);
        if (auto q = g["quota"]) {
            read(q, "small", c.generator.quota.small);
            read(q, "medium", c.generator.quota.medium);
            read(q, "large", c.generator.quota.large);
        }
    }
    c.validate();
    return c;
}

TrainConfig load_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read config " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    try {
        return parse_config(ss.str());
    } catch (const YAML::Exception& e) {
        throw std::runtime_error("config " + path.string() + ": " + e.what());
    }
}

std::string to_yaml(const TrainConfig& c)
{
    YAML::Emitter e;
    e.SetDoublePrecision(17);
    e << YAML::BeginMap;
    e << YAML::Key << "profile" << YAML::Value << c.profile;
    e << YAML::Key << "seed" << YAML::Value << c.seed;
    e << YAML::Key << "model" << YAML::Value << YAML::BeginMap;
    e << YAML::Key << "input_side" << YAML::Value << c.model.encoder.input_side;
    e << YAML::Key << "patch" << YAML::Value << c.model.encoder.patch;
    e << YAML::Key << "base_channels" << YAML::Value << c.model.encoder.base_channels;
    e << YAML::Key << "blocks_per_stage" << YAML::Value << c.model.encoder.blocks_per_stage;
    e << YAML::Key << "window" << YAML::Value << c.model.encoder.window;
    e << YAML::Key << "text_dim" << YAML::Value << c.model.text_dim;
    e << YAML::Key << "fill_patch" << YAML::Value << c.model.patch;
    e << YAML::Key << "theta" << YAML::Value << c.model.theta;
    e << YAML::Key << "bottleneck_blocks" << YAML::Value << c.model.bottleneck_blocks;
    e << YAML::Key << "residual_blocks" << YAML::Value << c.model.residual_blocks;
    e << YAML::Key << "refine_hidden" << YAML::Value << c.model.refine_hidden;
    e << YAML::EndMap;
    e << YAML::Key << "loss" << YAML::Value << YAML::BeginMap;
    e << YAML::Key << "rec" << YAML::Value << c.weights.rec;
    e << YAML::Key << "adv" << YAML::Value << c.weights.adv;
    e << YAML::EndMap;
    e << YAML::Key << "optimizer" << YAML::Value << YAML::BeginMap;
    e << YAML::Key << "lr" << YAML::Value << c.optim.lr;
    e << YAML::Key << "beta1" << YAML::Value << c.optim.beta1;
    e << YAML::Key << "beta2" << YAML::Value << c.optim.beta2;
    e << YAML::Key << "eps" << YAML::Value << c.optim.eps;
    e << YAML::Key << "weight_decay" << YAML::Value << c.optim.weight_decay;
    e << YAML::Key << "decay" << YAML::Value << c.optim.decay;
    e << YAML::EndMap;
    e << YAML::Key << "train" << YAML::Value << YAML::BeginMap;
    e << YAML::Key << "batch" << YAML::Value << c.batch;
    e << YAML::Key << "steps" << YAML::Value << c.steps;
    e << YAML::Key << "epochs" << YAML::Value << c.epochs;
    e << YAML::Key << "max_pairs" << YAML::Value << c.max_pairs;
    e << YAML::Key << "augment" << YAML::Value << c.augment;
    e << YAML::Key << "crop_shift" << YAML::Value << c.crop_shift;
    e << YAML::Key << "checkpoint_every" << YAML::Value << c.checkpoint_every;
    e << YAML::EndMap;
    e << YAML::Key << "discriminator" << YAML::Value << YAML::BeginMap;
    e << YAML::Key << "preset" << YAML::Value << c.disc_preset;
    e << YAML::Key << "channels" << YAML::Value << c.disc_channels;
    e << YAML::EndMap;
    e << YAML::Key << "tagger" << YAML::Value << YAML::BeginMap;
    e << YAML::Key << "embed_dim" << YAML::Value << c.tagger.embed_dim;
    e << YAML::Key << "hidden" << YAML::Value << c.tagger.hidden;
    e << YAML::Key << "epochs" << YAML::Value << c.tagger_train.epochs;
    e << YAML::Key << "lr" << YAML::Value << c.tagger_train.lr;
    e << YAML::Key << "seed" << YAML::Value << c.tagger_train.seed;
    e << YAML::Key << "corpus" << YAML::Value << c.tagger_corpus;
    e << YAML::EndMap;
    e << YAML::Key << "generator" << YAML::Value << YAML::BeginMap;
    e << YAML::Key << "pairs" << YAML::Value << c.generator.pairs;
    e << YAML::Key << "side" << YAML::Value << c.generator.side;
    e << YAML::Key << "scenes_per_cluster" << YAML::Value << c.generator.scenes_per_cluster;
    e << YAML::Key << "max_background_objects" << YAML::Value << c.generator.max_background_objects;
    e << YAML::Key << "expressions_per_pair" << YAML::Value << c.generator.expressions_per_pair;
    e << YAML::Key << "match_k" << YAML::Value << c.generator.match_k;
    e << YAML::Key << "train_fraction" << YAML::Value << c.generator.train_fraction;
    e << YAML::Key << "val_fraction" << YAML::Value << c.generator.val_fraction;
    e << YAML::Key << "quota" << YAML::Value << YAML::BeginMap;
    e << YAML::Key << "small" << YAML::Value << c.generator.quota.small;
    e << YAML::Key << "medium" << YAML::Value << c.generator.quota.medium;
    e << YAML::Key << "large" << YAML::Value << c.generator.quota.large;
    e << YAML::EndMap << YAML::EndMap;
    e << YAML::EndMap;
    return std::string(e.c_str()) + "\n";
}

std::uint64_t config_hash(const TrainConfig& config)
{
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char ch : to_yaml(config)) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    return h;
}

} // namespace sahm::runner
