#include <benchmark/benchmark.h>

// The distro's prebuilt benchmark_main archive carries LTO bytecode tied to one
// compiler patch level, so the entry point is built here instead.
BENCHMARK_MAIN();
