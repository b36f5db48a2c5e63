#include <cstdio>

int main() {
  std::puts("cfcast: not wired up yet");
  return 1;
}
