#include <cstdio>

int main() {
  std::puts("cpvdeblur: CLI under construction");
  return 0;
}
