#include <iostream>

int main() {
  std::cout << "qgraph\n";
  return 0;
}
