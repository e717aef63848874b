"""Verbatim prompt templates for the two table representations.

The wording, line breaks, and trailing whitespace are load-bearing: the
labeler contract is a golden-file match, so do not reflow or "clean up"
these strings.
"""

JSON_PROMPT_BODY = (
    'A schedule of events or activities (SoE or SoA) table in a clinical\n'
    'trial protocol specifies a plan of care for participants. \n'
    'Here are some characteristics of SoE/SoA tables:\n'
    '1. The header rows specify the name and timing of a series of visits\n'
    'to the research site where the participants receive some assessments\n'
    'or treatments.\n'
    '2. The visits are usually arranged in three phases: screening visits,\n'
    'treatment visits and follow-up visits. A typical SoE or SoA table\n'
    'includes the visits of ALL the three phases or periods.\n'
    '3. Body rows indicating the occurrence of an assessment or treatment\n'
    "during specific visits, often denoted by symbols like 'X', '✓', or '•'. \n"
    'Some cells may have additional textual specifications. Key terms often\n'
    'found in an SoE or SoA table include: "Informed Consent", \n'
    '"randomization", "treatment", "protocols", and "timing of visit".\n'
    'If you find these keywords (especially "Informed Consent"), this \n'
    'indicates an SoE or SoA table.\n'
    'Following tables are NOT SoE or SoA tables:\n'
    '    1. An SoE or SoA table is NOT a table describing the timepoints\n'
    '    when a specific assessment should be performed, such as a table\n'
    '    specific to laboratory assessments, pharmacokinetic collections,\n'
    '    or pharmacodynamic collections. These will often break down an\n'
    '    assessment into hourly collections after an occurrence, like a\n'
    '    pharmacokinetic collection that is performed many times on a \n'
    '    single day in relation to treatment administration (0h post-dose,\n'
    '    2h post-dose, 6h post-dose, and so on). These are supplemental\n'
    '    tables that greatly expand upon an abbreviated description in\n'
    '    the SoE, but are NOT an SoE table.\n'
    '    2. An SoE or SoA table is NOT a document history table listing\n'
    '    all previous protocol versions that have been amended and a \n'
    '    summary of their changes.\n'
    '    3. An SoE or SoA table is NOT an objectives table, describing \n'
    '    the research and statistical goals of the research study \n'
    '    (also endpoints, outcomes, etc.)\n'
    '    4. An SoE or SoA table is NOT a table describing adequate organ\n'
    '    function or laboratory values\n'
    '    5. An SoE or SoA table is NOT a table describing dose \n'
    '    modifications and toxicity in regards to the research treatment\n'
    'Given the input as a table in the JSON format, return YES if it is \n'
    'an SoE or SoA table or return NO if it is not. Do not output anything\n'
    'else.\n'
    'Input table in JSON format:\n'
    '{table}\n'
    'Your answer (One of YES or NO):'
)

TEXT_PROMPT_BODY = (
    'A schedule of events or activities (SoE or SoA) table in a clinical trial\n'
    'protocol specifies a plan of care for participants. Here are some \n'
    'characteristics of SoE/SoA tables:\n'
    '1. The header rows specify the name and timing of a series of visits\n'
    'to the research site where the participants receive some assessments\n'
    'or treatments.\n'
    '2. The visits are usually arranged in three phases: screening visits,\n'
    'treatment visits and follow-up visits. A typical SoE or SoA table \n'
    'includes the visits of ALL the three phases or periods.\n'
    '3. Body rows indicating the occurrence of an assessment or treatment\n'
    "during specific visits, often denoted by symbols like 'X', '✓', or '•'.\n"
    'Some cells may have additional textual specifications.\n'
    'Key terms often found in an SoE or SoA table include: "Informed Consent", \n'
    '"randomization", "treatment", "protocols", and "timing of visit". \n'
    'If you find these keywords (especially "Informed Consent"), \n'
    'this indicates an SoE or SoA table.\n'
    'Following tables are NOT SoE or SoA tables:\n'
    '    1. An SoE or SoA table is NOT a table describing the timepoints\n'
    '    when a specific assessment should be performed, such as a table \n'
    '    specific to laboratory assessments, pharmacokinetic collections, \n'
    '    or pharmacodynamic collections. These will often break down an \n'
    '    assessment into hourly collections after an occurrence, like a \n'
    '    pharmacokinetic collection that is performed many times on a \n'
    '    single day in relation to treatment administration (0h post-dose, \n'
    '    2h post-dose, 6h post-dose, and so on). These are supplemental \n'
    '    tables that greatly expand upon an abbreviated description in the SoE, \n'
    '    but are NOT an SoE table.\n'
    '    2. An SoE or SoA table is NOT a document history table listing all \n'
    '    previous protocol versions that have been amended and a summary of\n'
    '    their changes.\n'
    '    3. An SoE or SoA table is NOT an objectives table, describing the \n'
    '    research and statistical goals of the research study (also endpoints,\n'
    '    outcomes, etc.)\n'
    '    4. An SoE or SoA table is NOT a table describing adequate organ \n'
    '    function or laboratory values\n'
    '    5. An SoE or SoA table is NOT a table describing dose modifications\n'
    '    and toxicity in regards to the research treatment\n'
    'One way to identify an SoE or SoA table is to look at the text outside\n'
    'the table. Specifically, look for terms  like Schedule of Events, \n'
    'Schedule of Assessment, Schedule of Activities, Study Calender,\n'
    'Study Parameters, Study Schedule and related terms.\n'
    'If you see any of these terms or related terms in the text data you can\n'
    'conclude that it indicates an SoE or SoA table.\n'
    "If you don't see any of these terms in the text data you should look \n"
    'at the whole text data to determine if it is an SoE or SoA table.\n'
    'Your goal is to determine if the provide text data is from an SoE or \n'
    'SoA table or not. The text data includes all the text before, inside \n'
    'and after the table.\n'
    'Return YES if it is an SoE or SoA table or return NO if it is not. \n'
    'Do not output anything else.\n'
    'Text Data (including before, inside and after the table):\n'
    '{text}\n'
    'Your answer (YES or NO):'
)

JSON_PROMPT_SLOT = "{table}"
TEXT_PROMPT_SLOT = "{text}"
