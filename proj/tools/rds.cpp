#include <iostream>

#include "rds/cli.hpp"

int main(int argc, char** argv) { return rds::run_main(argc, argv, std::cout, std::cerr); }
