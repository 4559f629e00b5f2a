#include <csignal>
#include <iostream>

#include "dan/cli.hpp"

namespace {

void on_interrupt(int) { dan::train_stop_flag().store(true); }

}  // namespace

int main(int argc, char** argv) {
  std::signal(SIGINT, on_interrupt);
  std::signal(SIGTERM, on_interrupt);
  return dan::run_cli(argc, argv, std::cout, std::cerr);
}
