#include "sahm/losses.hpp"

#include <stdexcept>

namespace sahm::losses {

void require_binary(const Tensor& mask, const char* what)
{
    for (double v : mask.values())
        if (v != 0.0 && v != 1.0) throw std::invalid_argument(std::string(what) + ": mask must be binary, found " + std::to_string(v));
}

Var seg_loss(const std::vector<Var>& logits, const Tensor& gt_mask, std::vector<double>* per_scale)
{
    require_binary(gt_mask, "seg_loss");
    if (logits.empty()) throw std::invalid_argument("seg_loss: no scales");
    if (gt_mask.rank() != 3 || gt_mask.dim(0) != 1)
        throw std::invalid_argument("seg_loss: target must be 1 x H x W, got " + shape_str(gt_mask.shape()));
    const int h = gt_mask.dim(1), w = gt_mask.dim(2);
    Var total;
    for (const Var& l : logits) {
        Var up = (l.dim(1) == h && l.dim(2) == w) ? l : ops::resize_bilinear(l, h, w);
        Var term = ops::bce_with_logits_sum(up, gt_mask);
        if (per_scale) per_scale->push_back(term.value()[0]);
        total = total.valid() ? ops::add(total, term) : term;
    }
    return total;
}

Tensor area_downsample(const Tensor& x, int h, int w)
{
    if (x.rank() != 3 || h < 1 || w < 1 || x.dim(1) % h != 0 || x.dim(2) % w != 0 || x.dim(1) / h != x.dim(2) / w)
        throw std::invalid_argument("area_downsample: cannot reduce " + shape_str(x.shape()) + " to " +
                                    std::to_string(h) + "x" + std::to_string(w));
    const int k = x.dim(1) / h;
    return k == 1 ? x : ops::avg_pool(x, k);
}

Var rec_loss(const std::vector<Var>& rgb, const Tensor& gt_image, std::vector<double>* per_scale)
{
    if (rgb.empty()) throw std::invalid_argument("rec_loss: no scales");
    Var total;
    for (const Var& r : rgb) {
        Var term = ops::l1_mean(r, area_downsample(gt_image, r.dim(1), r.dim(2)));
        if (per_scale) per_scale->push_back(term.value()[0]);
        total = total.valid() ? ops::add(total, term) : term;
    }
    return total;
}

Var discriminator_term(Var d_fake, Var d_real)
{
    Var fake = ops::scale(ops::mean(ops::log(ops::one_minus(d_fake), kLogEps)), -1.0);
    Var real = ops::scale(ops::mean(ops::log(d_real, kLogEps)), -1.0);
    return ops::add(fake, real);
}

Var generator_term(Var d_fake) { return ops::scale(ops::mean(ops::log(d_fake, kLogEps)), -1.0); }

LossReport compose(double seg, double rec, double adv, const LossWeights& w)
{
    LossReport r;
    r.seg = seg;
    r.rec = rec;
    r.adv = adv;
    r.total = seg + w.rec * rec + w.adv * adv;
    return r;
}

Var total_loss(Var seg, Var rec, Var adv, const LossWeights& w, LossReport& report)
{
    Var t = ops::add(ops::add(seg, ops::scale(rec, w.rec)), ops::scale(adv, w.adv));
    LossReport r = compose(seg.value()[0], rec.value()[0], adv.value()[0], w);
    report.seg = r.seg;
    report.rec = r.rec;
    report.adv = r.adv;
    report.total = r.total;
    return t;
}

PatchDiscriminator::PatchDiscriminator(const std::string& preset, int base_channels, std::uint64_t seed)
    : preset_(preset)
{
    Rng rng(seed);
    const int c = base_channels;
    if (preset == "rf16") {
        layers_.push_back({nn::make_conv(params_, "disc.conv1", 3, c, 4, {2, 1, 1, 1}, rng), true});
        layers_.push_back({nn::make_conv(params_, "disc.conv2", c, 2 * c, 3, {2, 1, 1, 1}, rng), true});
        layers_.push_back({nn::make_conv(params_, "disc.conv3", 2 * c, 1, 3, {1, 1, 1, 1}, rng, nn::Init::Xavier), false});
    } else if (preset == "small") {
        layers_.push_back({nn::make_conv(params_, "disc.conv1", 3, c, 4, {2, 1, 1, 1}, rng), true});
        layers_.push_back({nn::make_conv(params_, "disc.conv2", c, 1, 1, {}, rng, nn::Init::Xavier), false});
    } else {
        throw std::invalid_argument("unknown discriminator preset '" + preset + "' (expected rf16 or small)");
    }
}

Var PatchDiscriminator::operator()(Graph& g, Var image) const
{
    Var x = image;
    for (const auto& l : layers_) {
        x = l.conv(g, x);
        if (l.activation) x = ops::leaky_relu(x, 0.2);
    }
    return ops::sigmoid(x);
}

int PatchDiscriminator::receptive_field() const
{
    int rf = 1, jump = 1;
    for (const auto& l : layers_) {
        const int k = l.conv.weight->value.dim(2);
        rf += (k - 1) * jump;
        jump *= l.conv.spec.stride;
    }
    return rf;
}

double discriminator_step(PatchDiscriminator& disc, AdamW& opt, double lr, const Tensor& fake, const Tensor& real)
{
    Graph g;
    Var term = discriminator_term(disc(g, g.constant(fake)), disc(g, g.constant(real)));
    g.backward(term);
    g.accumulate_parameter_grads();
    opt.step(disc.params(), lr);
    return term.value()[0];
}

double discriminator_step(PatchDiscriminator& disc, AdamW& opt, double lr, const std::vector<Tensor>& fake,
                          const std::vector<Tensor>& real)
{
    if (fake.empty() || fake.size() != real.size())
        throw std::invalid_argument("discriminator_step: need equally many fake and real images");
    const double inv = 1.0 / static_cast<double>(fake.size());
    double total = 0.0;
    for (std::size_t i = 0; i < fake.size(); ++i) {
        Graph g;
        Var term = discriminator_term(disc(g, g.constant(fake[i])), disc(g, g.constant(real[i])));
        g.backward(ops::scale(term, inv));
        g.accumulate_parameter_grads();
        total += term.value()[0] * inv;
    }
    opt.step(disc.params(), lr);
    return total;
}

} // namespace sahm::losses
