#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "tog/fixture.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Generate the synthetic benchmark dataset"};
  std::string out;
  tog::FixtureOptions opts;
  app.add_option("-o,--out", out, "Output directory")->required();
  app.add_option("--eval-scenes", opts.eval_scenes, "KC-KSC scene count")
      ->capture_default_str();
  app.add_option("--subcat-scenes", opts.subcat_scenes,
                 "subcategory-KC scene count")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    std::cout << tog::write_fixture(out, opts).string() << "\n";
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
