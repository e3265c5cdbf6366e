// SPDX-License-Identifier: Apache-2.0
#include <iostream>

#include "varembed/cli.hpp"

int main(int argc, char** argv) { return varembed::cli::run(argc, argv, std::cout, std::cerr); }
