#pragma once

// Command-line front end. Subcommands: postprocess, score, matrix, cluster,
// ensemble, plot, report. Returns 0 on success, 1 on validation failures,
// 2 on usage errors. The GOLDRANK_SEED environment variable, when set,
// switches ensemble tie-breaking from the deterministic rules to a seeded
// shuffle.

namespace goldrank::cli {

int run_cli(int argc, const char* const* argv);

}  // namespace goldrank::cli
