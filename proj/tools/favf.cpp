// SPDX-License-Identifier: Apache-2.0
#include "favf/cli.hpp"

int main(int argc, char** argv) { return favf::cli::run(argc, argv); }
