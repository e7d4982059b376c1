#include <filesystem>
#include <iomanip>
#include <iostream>

#include <CLI11.hpp>

#include "sahm/runner.hpp"

namespace fs = std::filesystem;
using namespace sahm;

namespace {

fs::path resolve(const fs::path& root, const fs::path& p) { return p.is_absolute() ? p : root / p; }

runner::TrainConfig read_config(const fs::path& path)
{
    return path.empty() ? runner::desk_profile() : runner::load_config(path);
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Referring object removal: dataset generation, training, evaluation and inference"};
    app.require_subcommand(1);
    std::string root = ".";
    app.add_option("--root", root, "Workspace root; relative paths resolve against it");

    std::string config, out, data, ckpt, split = "test", report, image, expr;
    std::uint64_t seed = 7;
    int timing_runs = 20;

    auto* gen = app.add_subcommand("generate", "Write a synthetic dataset");
    gen->add_option("--config", config, "YAML config (generator section is used)");
    gen->add_option("--out", out, "Output directory")->required();
    gen->add_option("--seed", seed, "Dataset seed");

    auto* tr = app.add_subcommand("train", "Train a model on the train split");
    tr->add_option("--config", config, "YAML config");
    tr->add_option("--data", data, "Dataset directory")->required();
    tr->add_option("--out", out, "Run directory")->required();

    auto* ev = app.add_subcommand("eval", "Evaluate a checkpoint");
    ev->add_option("--ckpt", ckpt, "Checkpoint")->required();
    ev->add_option("--data", data, "Dataset directory")->required();
    ev->add_option("--split", split, "train, val, test or all");
    ev->add_option("--report", report, "JSON report path; a CSV is written next to it")->required();
    ev->add_option("--timing-runs", timing_runs, "Timed forward passes for the overhead figures");

    auto* rm = app.add_subcommand("remove", "Remove the object an expression refers to");
    rm->add_option("--ckpt", ckpt, "Checkpoint")->required();
    rm->add_option("--image", image, "Input PNG")->required();
    rm->add_option("--expr", expr, "Referring expression")->required();
    rm->add_option("--out", out, "Output directory")->required();

    CLI11_PARSE(app, argc, argv);
    const fs::path base(root);
    const fs::path cfg = config.empty() ? fs::path() : resolve(base, config);

    try {
        if (*gen) {
            const auto c = read_config(cfg);
            const auto m = dataforge::generate_dataset(c.generator, seed, resolve(base, out));
            std::cout << "pairs " << m.pairs << " (train " << m.split_sizes[0] << ", val " << m.split_sizes[1]
                      << ", test " << m.split_sizes[2] << ")\n"
                      << "size classes small " << m.size_tally[0] << " medium " << m.size_tally[1] << " large "
                      << m.size_tally[2] << "\n";
            if (m.short_pools > 0) std::cout << "warning: " << m.short_pools << " scene matches saw fewer than k scenes\n";
        }
        else if (*tr) {
            const auto c = read_config(cfg);
            const auto ds = dataforge::load_dataset(resolve(base, data));
            const auto summary = runner::train(c, ds, resolve(base, out), [](const runner::StepReport& r) {
                if (r.step % 25 == 0)
                    std::cout << "step " << r.step << " epoch " << r.epoch << " total " << std::setprecision(6)
                              << r.loss.total << " seg " << r.loss.seg << " rec " << r.loss.rec << " adv "
                              << r.loss.adv << " disc " << r.loss.disc << std::endl;
            });
            std::cout << "tagger nll " << summary.tagger_nll << "\ncheckpoint " << summary.checkpoint.string()
                      << "\nseconds " << summary.seconds << "\n";
        }
        else if (*ev) {
            const auto session = runner::Session::load(resolve(base, ckpt));
            const auto ds = dataforge::load_dataset(resolve(base, data));
            const auto r = runner::evaluate(*session, ds, split, timing_runs);
            runner::write_report(r, resolve(base, report));
            std::cout << "pairs " << r.pairs.size() << "\npsnr_full " << r.psnr_full << "\npsnr_hole " << r.psnr_hole
                      << "\npsnr_hole_baseline " << r.psnr_hole_baseline << "\nssim " << r.ssim << "\niou " << r.iou
                      << "\nfid_proxy " << r.fid_proxy << "\n";
        }
        else if (*rm) {
            const auto session = runner::Session::load(resolve(base, ckpt));
            const auto r = runner::remove_object(*session, resolve(base, image), expr, resolve(base, out));
            std::cout << "mask " << r.mask_path.string() << "\noutput " << r.output_path.string() << "\n";
            if (r.prediction.identity_fallback) std::cout << "warning: no identity word recognized\n";
            if (r.prediction.low_confidence) std::cout << "warning: low-confidence mask\n";
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
