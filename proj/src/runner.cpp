#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "sahm/runner.hpp"

namespace sahm::runner {

namespace fs = std::filesystem;
using json = nlohmann::json;
using textproc::Role;

// --------------------------------------------------------------- container

namespace {

constexpr char kMagic[8] = {'S', 'A', 'H', 'M', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

template <class T>
void put(std::ostream& out, T v)
{
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::istream& in)
{
    T v{};
    if (!in.read(reinterpret_cast<char*>(&v), sizeof(T))) throw std::runtime_error("checkpoint: truncated file");
    return v;
}

void put_string(std::ostream& out, const std::string& s)
{
    put<std::uint64_t>(out, s.size());
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string get_string(std::istream& in)
{
    const auto n = get<std::uint64_t>(in);
    if (n > (1ull << 32)) throw std::runtime_error("checkpoint: corrupt string length");
    std::string s(n, '\0');
    if (!in.read(s.data(), static_cast<std::streamsize>(n))) throw std::runtime_error("checkpoint: truncated file");
    return s;
}

} // namespace

void Container::save(const fs::path& path) const
{
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out.write(kMagic, sizeof(kMagic));
    put(out, kVersion);
    put<std::uint64_t>(out, strings.size());
    for (const auto& [k, v] : strings) {
        put_string(out, k);
        put_string(out, v);
    }
    put<std::uint64_t>(out, tensors.size());
    for (const auto& [k, t] : tensors) {
        put_string(out, k);
        put<std::uint32_t>(out, static_cast<std::uint32_t>(t.rank()));
        for (int d : t.shape()) put<std::int32_t>(out, d);
        out.write(reinterpret_cast<const char*>(t.data()), static_cast<std::streamsize>(t.size() * sizeof(double)));
    }
    if (!out) throw std::runtime_error("failed writing " + path.string());
}

Container Container::load(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read checkpoint " + path.string());
    char magic[sizeof(kMagic)];
    if (!in.read(magic, sizeof(magic)) || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw std::runtime_error(path.string() + " is not a checkpoint");
    if (const auto v = get<std::uint32_t>(in); v != kVersion)
        throw std::runtime_error("checkpoint version " + std::to_string(v) + " is not supported");
    Container c;
    const auto ns = get<std::uint64_t>(in);
    for (std::uint64_t i = 0; i < ns; ++i) {
        std::string k = get_string(in);
        c.strings[k] = get_string(in);
    }
    const auto nt = get<std::uint64_t>(in);
    for (std::uint64_t i = 0; i < nt; ++i) {
        std::string k = get_string(in);
        const auto rank = get<std::uint32_t>(in);
        if (rank > 8) throw std::runtime_error("checkpoint: corrupt tensor rank");
        Shape shape(rank);
        for (auto& d : shape) d = get<std::int32_t>(in);
        Tensor t(shape);
        if (!in.read(reinterpret_cast<char*>(t.data()), static_cast<std::streamsize>(t.size() * sizeof(double))))
            throw std::runtime_error("checkpoint: truncated tensor " + k);
        c.tensors.emplace(std::move(k), std::move(t));
    }
    return c;
}

const std::string& Container::string(const std::string& key) const
{
    auto it = strings.find(key);
    if (it == strings.end()) throw std::runtime_error("checkpoint: missing entry '" + key + "'");
    return it->second;
}

const Tensor& Container::tensor(const std::string& key) const
{
    auto it = tensors.find(key);
    if (it == tensors.end()) throw std::runtime_error("checkpoint: missing tensor '" + key + "'");
    return it->second;
}

void store_params(Container& c, const std::string& prefix, const ParamSet& ps)
{
    for (const auto& [name, p] : ps) {
        c.tensors[prefix + name] = p.value;
        if (!p.moment1.empty()) c.tensors[prefix + name + "#m1"] = p.moment1;
        if (!p.moment2.empty()) c.tensors[prefix + name + "#m2"] = p.moment2;
    }
}

void restore_params(const Container& c, const std::string& prefix, ParamSet& ps)
{
    for (auto& [name, p] : ps) {
        const Tensor& t = c.tensor(prefix + name);
        if (t.shape() != p.value.shape())
            throw std::runtime_error("checkpoint: " + prefix + name + " has shape " + shape_str(t.shape()) +
                                     ", model expects " + shape_str(p.value.shape()));
        p.value = t;
        p.grad = Tensor();
        auto m1 = c.tensors.find(prefix + name + "#m1");
        auto m2 = c.tensors.find(prefix + name + "#m2");
        p.moment1 = m1 != c.tensors.end() ? m1->second : Tensor();
        p.moment2 = m2 != c.tensors.end() ? m2->second : Tensor();
    }
}

// ----------------------------------------------------------------- session

namespace {

AdamWConfig adamw(const OptimConfig& o) { return {o.lr, o.beta1, o.beta2, o.eps, o.weight_decay}; }

// Independent streams derived from the run seed.
std::uint64_t stream_seed(std::uint64_t seed, std::uint32_t stream)
{
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), stream};
    std::uint32_t out[2];
    seq.generate(out, out + 2);
    return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

double param_norm(const ParamSet& ps)
{
    double s = 0.0;
    for (const auto& [_, p] : ps)
        for (double v : p.value.values()) s += v * v;
    return std::sqrt(s);
}

double max_value(const Tensor& t) { return *std::max_element(t.values().begin(), t.values().end()); }

} // namespace

Session::Session(TrainConfig config, textproc::Vocabulary vocab)
    : config_(std::move(config)), vocab_(std::move(vocab)), gen_opt_(adamw(config_.optim)),
      disc_opt_(adamw(config_.optim)), rng_(stream_seed(config_.seed, 0xDA7A))
{
    config_.validate();
    tagger_ = std::make_unique<textproc::Tagger>(vocab_.size(), config_.tagger, stream_seed(config_.seed, 0x7A6));
    model_ = std::make_unique<Model>(config_.model, vocab_.size(), stream_seed(config_.seed, 0x30DE1));
    disc_ = std::make_unique<losses::PatchDiscriminator>(config_.disc_preset, config_.disc_channels,
                                                         stream_seed(config_.seed, 0xD15C));
}

double Session::train_tagger()
{
    const auto corpus = dataforge::template_corpus(config_.tagger_corpus, config_.tagger_train.seed);
    return tagger_->train(corpus, vocab_, config_.tagger_train);
}

std::vector<Role> Session::tag(const textproc::TokenizedExpression& expr) const { return tagger_->tag(expr); }

StepReport Session::train_step(const std::vector<Sample>& batch, double lr)
{
    if (batch.empty()) throw std::invalid_argument("train_step: empty batch");
    const double inv = 1.0 / static_cast<double>(batch.size());
    StepReport report;
    report.step = step_;
    report.lr = lr;
    double seg = 0.0, rec = 0.0, adv = 0.0;
    std::vector<Tensor> fakes, reals;
    model_->params().zero_grad();
    disc_->params().zero_grad();
    for (const Sample& s : batch) {
        const auto expr = textproc::from_tokens(s.tokens, vocab_);
        const auto tags = tagger_->tag(expr);
        Graph g;
        ForwardResult f = model_->forward(g, s.image, expr, tags);
        losses::LossReport r;
        Var ls = losses::seg_loss(f.seg_outputs(), s.mask, &r.seg_scales);
        Var lr_ = losses::rec_loss(f.rgb_outputs(), s.background, &r.rec_scales);
        Var la = losses::generator_term((*disc_)(g, f.output));
        Var total = losses::total_loss(ls, lr_, la, config_.weights, r);
        if (!std::isfinite(r.total)) {
            std::ostringstream msg;
            msg << "non-finite loss at step " << step_ << ": seg=" << r.seg << " rec=" << r.rec << " adv=" << r.adv
                << " model parameter norm=" << param_norm(model_->params())
                << " discriminator parameter norm=" << param_norm(disc_->params());
            throw TrainingDiverged(msg.str());
        }
        g.backward(ops::scale(total, inv));
        g.accumulate_parameter_grads();
        seg += r.seg * inv;
        rec += r.rec * inv;
        adv += r.adv * inv;
        auto avg = [&](std::vector<double>& into, const std::vector<double>& from) {
            into.resize(from.size(), 0.0);
            for (std::size_t i = 0; i < from.size(); ++i) into[i] += from[i] * inv;
        };
        avg(report.loss.seg_scales, r.seg_scales);
        avg(report.loss.rec_scales, r.rec_scales);
        report.identity_fallbacks += f.text.identity_fallback;
        report.attribute_empty += f.text.attribute_empty;
        fakes.push_back(f.output.value());
        reals.push_back(s.background);
    }
    // The generator pass leaves gradients on the discriminator; they are not
    // part of its own update.
    disc_->params().zero_grad();
    gen_opt_.step(model_->params(), lr);
    model_->after_update();
    const double disc_term = losses::discriminator_step(*disc_, disc_opt_, lr, fakes, reals);
    auto scales = std::move(report.loss.seg_scales);
    auto rscales = std::move(report.loss.rec_scales);
    report.loss = losses::compose(seg, rec, adv, config_.weights);
    report.loss.seg_scales = std::move(scales);
    report.loss.rec_scales = std::move(rscales);
    report.loss.disc = disc_term;
    if (!std::isfinite(disc_term))
        throw TrainingDiverged("non-finite discriminator term at step " + std::to_string(step_) +
                               ": discriminator parameter norm=" + std::to_string(param_norm(disc_->params())));
    ++step_;
    return report;
}

Prediction Session::predict(const Tensor& image, const std::vector<std::string>& tokens) const
{
    Prediction p;
    p.expr = textproc::from_tokens(tokens, vocab_);
    p.roles = tagger_->tag(p.expr);
    Graph g;
    ForwardResult f = model_->forward(g, image, p.expr, p.roles);
    p.mask_prob = ops::sigmoid(f.mask_logits.value());
    p.mask = f.mask;
    p.output = f.output.value();
    p.identity_fallback = f.text.identity_fallback;
    p.low_confidence = max_value(p.mask_prob) < config_.model.theta;
    return p;
}

void Session::save(const fs::path& path) const
{
    Container c;
    store_params(c, "model/", model_->params());
    store_params(c, "tagger/", tagger_->params());
    store_params(c, "disc/", disc_->params());
    c.strings["config"] = to_yaml(config_);
    c.strings["config_hash"] = std::to_string(config_hash(config_));
    c.strings["vocab"] = vocab_.serialize();
    std::ostringstream rng;
    rng << rng_;
    c.strings["rng"] = rng.str();
    c.strings["step"] = std::to_string(step_);
    c.strings["gen_opt_steps"] = std::to_string(gen_opt_.steps());
    c.strings["disc_opt_steps"] = std::to_string(disc_opt_.steps());
    c.save(path);
}

std::unique_ptr<Session> Session::load(const fs::path& path)
{
    const Container c = Container::load(path);
    TrainConfig config = parse_config(c.string("config"));
    if (std::to_string(config_hash(config)) != c.string("config_hash"))
        throw std::runtime_error("checkpoint " + path.string() + ": config hash mismatch");
    auto s = std::make_unique<Session>(std::move(config), textproc::Vocabulary::deserialize(c.string("vocab")));
    restore_params(c, "model/", s->model_->params());
    restore_params(c, "tagger/", s->tagger_->params());
    restore_params(c, "disc/", s->disc_->params());
    std::istringstream rng(c.string("rng"));
    rng >> s->rng_;
    s->step_ = std::stoll(c.string("step"));
    s->gen_opt_.set_steps(std::stoll(c.string("gen_opt_steps")));
    s->disc_opt_.set_steps(std::stoll(c.string("disc_opt_steps")));
    return s;
}

// ------------------------------------------------------------------- train

Sample load_sample(const dataforge::PairRecord& pair, std::size_t expression)
{
    if (expression >= pair.expressions.size())
        throw std::out_of_range("pair " + std::to_string(pair.id) + " has no expression " + std::to_string(expression));
    Sample s;
    s.image = to_tensor(read_png(pair.composite, 3));
    s.background = to_tensor(read_png(pair.background, 3));
    s.mask = to_tensor(read_png(pair.mask, 1));
    for (double& v : s.mask.values()) v = v >= 0.5 ? 1.0 : 0.0;
    s.tokens = pair.expressions[expression].tokens;
    return s;
}

namespace {

// Translates by (dx, dy); `replicate` clamps at the border, otherwise zeros.
Tensor shift(const Tensor& t, int dx, int dy, bool replicate)
{
    const int c = t.dim(0), h = t.dim(1), w = t.dim(2);
    Tensor out(t.shape());
    for (int k = 0; k < c; ++k)
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                int sx = x - dx, sy = y - dy;
                if (sx < 0 || sy < 0 || sx >= w || sy >= h) {
                    if (!replicate) continue;
                    sx = std::clamp(sx, 0, w - 1);
                    sy = std::clamp(sy, 0, h - 1);
                }
                out(k, y, x) = t(k, sy, sx);
            }
    return out;
}

Tensor flip(const Tensor& t)
{
    const int c = t.dim(0), h = t.dim(1), w = t.dim(2);
    Tensor out(t.shape());
    for (int k = 0; k < c; ++k)
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) out(k, y, x) = t(k, y, w - 1 - x);
    return out;
}

} // namespace

Sample augment(const Sample& s, int max_shift, Rng& rng)
{
    Sample out = s;
    if (std::bernoulli_distribution(0.5)(rng)) {
        out.image = flip(s.image);
        out.background = flip(s.background);
        out.mask = flip(s.mask);
        for (auto& t : out.tokens) {
            if (t == "left") t = "right";
            else if (t == "right") t = "left";
        }
    }
    if (max_shift > 0) {
        std::uniform_int_distribution<int> d(-max_shift, max_shift);
        const int dx = d(rng), dy = d(rng);
        out.image = shift(out.image, dx, dy, true);
        out.background = shift(out.background, dx, dy, true);
        out.mask = shift(out.mask, dx, dy, false);
    }
    return out;
}

namespace {

json report_json(const StepReport& r)
{
    return json{{"step", r.step},
                {"epoch", r.epoch},
                {"lr", r.lr},
                {"seg", r.loss.seg},
                {"rec", r.loss.rec},
                {"adv", r.loss.adv},
                {"total", r.loss.total},
                {"disc", r.loss.disc},
                {"seg_scales", r.loss.seg_scales},
                {"rec_scales", r.loss.rec_scales},
                {"identity_fallbacks", r.identity_fallbacks},
                {"attribute_empty", r.attribute_empty}};
}

} // namespace

TrainSummary train(const TrainConfig& config, const dataforge::Dataset& data, const fs::path& out,
                   const StepCallback& on_step)
{
    config.validate();
    const auto start = std::chrono::steady_clock::now();
    if (data.side != config.model.encoder.input_side)
        throw std::invalid_argument("dataset side " + std::to_string(data.side) + " does not match model input side " +
                                    std::to_string(config.model.encoder.input_side));
    auto pairs = data.split("train");
    if (config.max_pairs > 0 && static_cast<int>(pairs.size()) > config.max_pairs) pairs.resize(config.max_pairs);
    if (pairs.empty()) throw std::invalid_argument("dataset " + data.root.string() + " has no training pairs");

    std::vector<std::vector<Sample>> samples;
    for (const auto* p : pairs) {
        std::vector<Sample> per_pair;
        for (std::size_t e = 0; e < p->expressions.size(); ++e) per_pair.push_back(load_sample(*p, e));
        if (per_pair.empty()) throw std::invalid_argument("pair " + std::to_string(p->id) + " has no expressions");
        samples.push_back(std::move(per_pair));
    }

    fs::create_directories(out);
    {
        std::ofstream cfg(out / "config.yaml");
        cfg << to_yaml(config);
    }
    Session session(config, data.vocab);
    TrainSummary summary;
    summary.tagger_nll = session.train_tagger();

    const int n = static_cast<int>(samples.size());
    const int per_epoch = (n + config.batch - 1) / config.batch;
    const std::int64_t total = config.epochs > 0 ? static_cast<std::int64_t>(config.epochs) * per_epoch : config.steps;
    std::ofstream log(out / "log.jsonl");
    std::vector<int> order(static_cast<std::size_t>(n));
    Rng& rng = session.rng();
    for (std::int64_t step = 0; step < total; ++step) {
        const int epoch = static_cast<int>(step / per_epoch);
        const int slot = static_cast<int>(step % per_epoch);
        if (slot == 0) {
            std::iota(order.begin(), order.end(), 0);
            std::shuffle(order.begin(), order.end(), rng);
        }
        std::vector<Sample> batch;
        for (int i = slot * config.batch; i < std::min(n, (slot + 1) * config.batch); ++i) {
            const auto& options = samples[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])];
            const Sample& s = options[std::uniform_int_distribution<std::size_t>(0, options.size() - 1)(rng)];
            batch.push_back(config.augment ? augment(s, config.crop_shift, rng) : s);
        }
        const double lr = config.optim.lr * std::pow(config.optim.decay, epoch);
        StepReport r = session.train_step(batch, lr);
        r.epoch = epoch;
        log << report_json(r).dump() << "\n";
        log.flush();
        if (on_step) on_step(r);
        summary.trace.push_back(std::move(r));
        if (config.checkpoint_every > 0 && (step + 1) % config.checkpoint_every == 0) {
            std::ostringstream name;
            name << "step_" << std::setw(6) << std::setfill('0') << step + 1 << ".ckpt";
            session.save(out / name.str());
        }
    }
    summary.checkpoint = out / "model.ckpt";
    session.save(summary.checkpoint);
    summary.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return summary;
}

// -------------------------------------------------------------- evaluation

std::vector<double> pooled_features(const Model& model, const Tensor& image)
{
    Graph g;
    const auto pyramid = model.encoder().encode_image(g, g.constant(image));
    const Tensor& v = pyramid.v.back().value();
    const int c = v.dim(0), hw = v.dim(1) * v.dim(2);
    std::vector<double> out(static_cast<std::size_t>(c), 0.0);
    for (int k = 0; k < c; ++k) {
        for (int i = 0; i < hw; ++i) out[static_cast<std::size_t>(k)] += v[static_cast<std::size_t>(k) * hw + i];
        out[static_cast<std::size_t>(k)] /= hw;
    }
    return out;
}

EvalReport evaluate(const Session& session, const dataforge::Dataset& data, const std::string& split, int timing_runs)
{
    const auto pairs = data.split(split);
    if (pairs.empty()) throw std::invalid_argument("split '" + split + "' is empty in " + data.root.string());
    if (data.side != session.config().model.encoder.input_side)
        throw std::invalid_argument("dataset side " + std::to_string(data.side) + " does not match the checkpoint");
    EvalReport report;
    report.split = split;
    std::vector<double> ious;
    std::vector<std::vector<double>> fake_features, real_features;
    for (const auto* p : pairs) {
        const Sample s = load_sample(*p, 0);
        const Prediction pred = session.predict(s.image, s.tokens);
        PairMetrics m;
        m.id = p->id;
        m.psnr_full = evalkit::psnr(pred.output, s.background);
        m.psnr_hole = evalkit::psnr_masked(pred.output, s.background, s.mask);
        m.psnr_hole_baseline = evalkit::psnr_masked(s.image, s.background, s.mask);
        m.ssim = evalkit::ssim(pred.output, s.background);
        m.iou = evalkit::iou(pred.mask, s.mask);
        m.low_confidence = pred.low_confidence;
        ious.push_back(m.iou);
        fake_features.push_back(pooled_features(session.model(), pred.output));
        real_features.push_back(pooled_features(session.model(), s.background));
        report.pairs.push_back(m);
    }
    const double inv = 1.0 / static_cast<double>(report.pairs.size());
    for (const auto& m : report.pairs) {
        report.psnr_full += m.psnr_full * inv;
        report.psnr_hole += m.psnr_hole * inv;
        report.psnr_hole_baseline += m.psnr_hole_baseline * inv;
        report.ssim += m.ssim * inv;
        report.iou += m.iou * inv;
    }
    for (double k : {0.5, 0.6, 0.7, 0.8, 0.9}) {
        std::ostringstream key;
        key << std::fixed << std::setprecision(1) << k;
        report.pr_at_k[key.str()] = evalkit::pr_at_k(ious, k);
    }
    report.fid_proxy = fake_features.size() >= 2 ? evalkit::fid_proxy(fake_features, real_features) : 0.0;
    report.head_importance = fusion::head_importance(session.model().fusion_stages());
    if (timing_runs > 0) {
        const Sample s = load_sample(*pairs.front(), 0);
        report.overhead = evalkit::overhead_report([&] { session.predict(s.image, s.tokens); },
                                                   session.model().params().count(), timing_runs,
                                                   std::min(3, timing_runs));
    }
    else {
        report.overhead.params = session.model().params().count();
    }
    return report;
}

void write_report(const EvalReport& r, const fs::path& path)
{
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    json per_pair = json::array();
    for (const auto& m : r.pairs)
        per_pair.push_back({{"id", m.id},
                            {"psnr_full", m.psnr_full},
                            {"psnr_hole", m.psnr_hole},
                            {"psnr_hole_baseline", m.psnr_hole_baseline},
                            {"ssim", m.ssim},
                            {"iou", m.iou},
                            {"low_confidence", m.low_confidence}});
    json j{{"split", r.split},
           {"pairs", r.pairs.size()},
           {"psnr_full", r.psnr_full},
           {"psnr_hole", r.psnr_hole},
           {"psnr_hole_baseline", r.psnr_hole_baseline},
           {"ssim", r.ssim},
           {"iou", r.iou},
           {"pr_at_k", r.pr_at_k},
           {"fid_proxy", r.fid_proxy},
           {"fid_proxy_note", "Frechet distance of pooled encoder features; not an Inception FID"},
           {"lpips", nullptr},
           {"lpips_note", "omitted: needs a pretrained perceptual network"},
           {"head_importance", r.head_importance},
           {"overhead",
            {{"params", r.overhead.params},
             {"flops", r.overhead.flops},
             {"seconds_median", r.overhead.seconds_median},
             {"fps", r.overhead.fps}}},
           {"per_pair", per_pair}};
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << j.dump(2) << "\n";
    fs::path csv = path;
    csv.replace_extension(".csv");
    std::ofstream c(csv);
    if (!c) throw std::runtime_error("cannot write " + csv.string());
    c << std::setprecision(10) << "id,psnr_full,psnr_hole,psnr_hole_baseline,ssim,iou,low_confidence\n";
    for (const auto& m : r.pairs)
        c << m.id << ',' << m.psnr_full << ',' << m.psnr_hole << ',' << m.psnr_hole_baseline << ',' << m.ssim << ','
          << m.iou << ',' << (m.low_confidence ? 1 : 0) << "\n";
}

// ------------------------------------------------------------------ remove

RemoveResult remove_object(const Session& session, const fs::path& image, const std::string& expression,
                           const fs::path& out)
{
    const Image8 img = read_png(image, 3);
    const int side = session.config().model.encoder.input_side;
    if (img.width != side || img.height != side)
        throw std::invalid_argument(image.string() + " is " + std::to_string(img.width) + "x" +
                                    std::to_string(img.height) + ", the model expects " + std::to_string(side) + "x" +
                                    std::to_string(side));
    const auto expr = textproc::tokenize(expression, session.vocab());
    RemoveResult r;
    r.prediction = session.predict(to_tensor(img), expr.tokens);
    fs::create_directories(out);
    r.mask_path = out / "mask.png";
    r.output_path = out / "output.png";
    write_png(r.mask_path, from_tensor(r.prediction.mask));
    write_png(r.output_path, from_tensor(r.prediction.output));
    return r;
}

} // namespace sahm::runner
