#include "conceptree/pipeline.hpp"

int main(int argc, char** argv) { return conceptree::run_cli(argc, argv); }
