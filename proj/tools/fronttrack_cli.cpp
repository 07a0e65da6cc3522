#include <cstdio>

int main() {
  std::puts("fronttrack: placeholder");
  return 0;
}
