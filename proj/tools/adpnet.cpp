#include <adpnet/cli.hpp>

int main(int argc, char **argv) { return adpnet::cli::run(argc, argv); }
