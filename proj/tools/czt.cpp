#include <cstdio>

int main() {
  std::puts("czt: placeholder");
  return 0;
}
