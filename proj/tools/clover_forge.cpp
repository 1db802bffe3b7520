// SPDX-License-Identifier: Apache-2.0
#include <iostream>

#include "clover/cli.hpp"

int main(int argc, char** argv) { return clover::cli::dispatch(argc, argv, std::cout, std::cerr); }
