// Copyright (c) 2026 The llmconf Authors.
// SPDX-License-Identifier: Apache-2.0

#include <iostream>

#include "llmconf/cli.hpp"

int main(int argc, char** argv) { return llmconf::run_cli(argc, argv, std::cout, std::cerr); }
