#pragma once

#include <string>

namespace ergodec {

struct RunOptions {
    std::string config_path;
    std::string out_dir = "out";
    unsigned threads = 0; // 0 = available parallelism
    bool svg = false;
};

// Batch commands. Each reads the config, echoes it into the output directory,
// writes its CSV/JSON results, and returns the process exit code:
// 0 pass, 1 check failure, 2 config error, 3 decomposition failure.
int run_classify(const RunOptions& opt);
int run_decompose(const RunOptions& opt);
int run_verify(const RunOptions& opt);
int run_witness(const RunOptions& opt);

} // namespace ergodec
