// SPDX-License-Identifier: Apache-2.0
// Runs every acceptance criterion, including the multi-seed learning check.
// Optional arguments select criteria by id, e.g. `acceptance 2 9`.

#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include "verify_suite.hpp"

int main(int argc, char** argv) {
  std::vector<int> only;
  for (int i = 1; i < argc; ++i) only.push_back(std::atoi(argv[i]));
  const bool ok = pompc::verify::run_all(true, std::cout, only);
  std::cout << (ok ? "acceptance: all selected criteria passed" : "acceptance: FAILED") << std::endl;
  return ok ? 0 : 1;
}
