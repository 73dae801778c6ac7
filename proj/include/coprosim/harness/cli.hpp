#pragma once

namespace coprosim::harness {

/// Entry point behind the `coprosim` binary; exposed as a function so tests
/// can drive the CLI in-process. Returns the process exit code: 0 success,
/// 1 usage/IO errors, 2 internal errors or failed checks.
int cli_main(int argc, char** argv);

}  // namespace coprosim::harness
