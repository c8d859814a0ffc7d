// Copyright 2026 The ganom authors
// SPDX-License-Identifier: Apache-2.0

#include <string>
#include <vector>

#include "ganom/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return ganom::cli::run(args);
}
