#pragma once

#include <string>
#include <vector>

namespace fixtures {

inline const std::string kApple =
    "I like this apple because it looks so fresh and I think it should be delicious.";
inline const std::string kAppleBackbone =
    "I like this apple because it looks so fresh and I think it should be delicious. I like apple.";
inline const std::string kAppleDeletion =
    "I like this apple it looks so fresh I think it should be delicious.";

// Twenty lines covering both filter rules, including a capitalized ending
// whose successor also ends capitalized.
inline const std::vector<std::string> kFilterInput = {
    "Hi there.",                                    // two words
    "The cat sat on the mat.",
    "We flew home to the U.S.",                     // capitalized last word
    "This one goes because of the previous line.",
    "Dogs bark at night.",
    "A sentence that ends with Paris.",
    "Dropped as the successor.",
    "ok.",                                          // one word
    "Three words here.",
    "Is this the end?",
    "Nothing wrong with this one.",
    "Visit Rome",
    "Successor of Rome.",                           // also ends capitalized
    "Final sentence is fine.",
    "a b c",
    "Word word word word.",
    "   ",
    "Commas , do , not , count .",
    "Ends with a number 42.",
    "last one ends on IBM",
};

inline const std::vector<std::string> kFilterSurvivors = {
    "The cat sat on the mat.",
    "Dogs bark at night.",
    "Three words here.",
    "Is this the end?",
    "Nothing wrong with this one.",
    "a b c",
    "Word word word word.",
    "Commas , do , not , count .",
    "Ends with a number 42.",
};

}  // namespace fixtures
