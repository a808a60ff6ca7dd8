// Single translation unit for the Catch2 amalgamated implementation.
#include <catch2/catch_amalgamated.cpp>
