#include <iostream>

int main() {
  std::cout << "tpmg\n";
  return 0;
}
