// SPDX-License-Identifier: Apache-2.0
#include "cfspm/cli.hpp"

int main(int argc, char** argv) { return cfspm::dispatch(argc, argv); }
