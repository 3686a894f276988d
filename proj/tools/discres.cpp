#include "discres/cli.hpp"

int
main(int argc, char** argv)
{
  return discres::run(argc, argv);
}
