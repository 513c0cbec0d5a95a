#include "patchsmooth/cli.hpp"

#include <exception>
#include <iostream>
#include <string>
#include <vector>

int main(int argc, char** argv) {
  using namespace patchsmooth::cli;
  std::vector<std::string> args(argv + 1, argv + argc);
  try {
    const RunSpec spec = parse_args(args);
    run(spec, std::cout, std::cerr);
  } catch (const HelpRequested& help) {
    std::cout << help.what();
    return 0;
  } catch (const UsageError& e) {
    std::cerr << "patchsmooth: " << e.what() << "\nRun with --help for usage.\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "patchsmooth: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
