#include <cstdio>
#include <cstring>
#include <string>

#include "bgq/parallel.hpp"
#include "checks.hpp"

// One PASS/FAIL line per acceptance criterion. Options: --quick, --only <id>.
int main(int argc, char** argv) {
  bgq::acceptance::CheckOptions opt;
  opt.threads = bgq::resolve_threads(0);
  int only = 0;
  for (int i = 1; i < argc; ++i) {
    if (!std::strcmp(argv[i], "--quick")) opt.quick = true;
    else if (!std::strcmp(argv[i], "--only") && i + 1 < argc) only = std::stoi(argv[++i]);
  }
  int failed = 0;
  for (const auto& c : bgq::acceptance::all_checks()) {
    if (only && c.id != only) continue;
    const auto r = bgq::acceptance::run_check(c, opt);
    std::printf("%s [%d] %s: %s (%.2f s)\n", r.pass ? "PASS" : "FAIL", r.id, r.name.c_str(), r.detail.c_str(), r.seconds);
    std::fflush(stdout);
    failed += r.pass ? 0 : 1;
  }
  return failed ? 1 : 0;
}
