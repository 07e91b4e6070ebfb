#include <cstdio>

int main() {
  std::puts("scwr: placeholder");
  return 0;
}
