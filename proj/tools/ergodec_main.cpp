#include <string>

#include "CLI11.hpp"

#include "ergodec/runner.hpp"

int main(int argc, char** argv) {
    CLI::App app{"ergodec: empirical-measure convergence, ergodic decomposition, and "
                 "affine-functional verification on registered dynamical systems"};
    app.require_subcommand(1);

    ergodec::RunOptions opt;
    const auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", opt.config_path, "JSON experiment configuration")
            ->required();
        sub->add_option("--threads", opt.threads, "worker threads (default: available cores)");
        sub->add_flag("--svg", opt.svg, "emit SVG plots");
        sub->add_option("--out", opt.out_dir, "output directory (default: out)");
    };

    CLI::App* classify = app.add_subcommand(
        "classify", "classify orbit convergence for each configured point");
    CLI::App* decompose = app.add_subcommand(
        "decompose", "sample, classify, and cluster ergodic limit estimates");
    CLI::App* verify = app.add_subcommand(
        "verify", "run barycenter / Borel / affine-functional residual checks");
    CLI::App* witness = app.add_subcommand(
        "witness", "check the oscillating witness stream and its shift for non-convergence");
    for (CLI::App* sub : {classify, decompose, verify, witness}) add_common(sub);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    if (classify->parsed()) return ergodec::run_classify(opt);
    if (decompose->parsed()) return ergodec::run_decompose(opt);
    if (verify->parsed()) return ergodec::run_verify(opt);
    return ergodec::run_witness(opt);
}
