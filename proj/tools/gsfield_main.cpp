// Command-line entry point. Subcommands are filled in as the library grows.
#include <cstdio>

int main() {
  std::fprintf(stderr, "gsfield: no subcommands wired yet\n");
  return 2;
}
