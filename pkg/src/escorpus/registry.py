"""Registries of response strategies and conversation scenarios.

The strategy registry is closed: exactly 16 entries, unique abbreviations,
and these names are the canonical spelling used everywhere a strategy is
serialized. The scenario registry ships with 36 canonical entries and stays
open for extension; additions are flagged non-canonical.
"""

from dataclasses import dataclass, field

from .errors import UnknownScenario, UnknownStrategy


@dataclass(frozen=True)
class Strategy:
    name: str
    abbreviation: str
    definition: str
    example: str


@dataclass(frozen=True)
class Scenario:
    name: str
    example_descriptions: tuple[str, ...] = ()
    canonical: bool = True


_STRATEGY_ROWS = [
    (
        "Reflective Statements",
        "RS",
        "Repeat or rephrase what the User has expressed to show that you're actively listening.",
        'User: "I\'m feeling really overwhelmed with all the work I have to do." '
        'Assistant: "It sounds like you\'re feeling overwhelmed with your workload."',
    ),
    (
        "Clarification",
        "Cla",
        "Seek clarification to ensure a clear understanding of the User's emotions and experiences.",
        'User: "I just can\'t shake off this feeling of sadness." '
        'Assistant: "Could you help me understand what might have triggered this feeling of sadness?"',
    ),
    (
        "Emotional Validation",
        "EV",
        "Acknowledge and validate the User's emotions without judgment.",
        'User: "I\'m so frustrated with myself for making the same mistake again." '
        'Assistant: "It\'s completely understandable to feel frustrated when you make a mistake."',
    ),
    (
        "Empathetic Statements",
        "ES",
        "Express understanding and empathy towards the User's experiences.",
        'User: "I\'m really struggling with my self-confidence right now." '
        'Assistant: "I can imagine how challenging it must be to navigate through situations that '
        'affect your self-confidence."',
    ),
    (
        "Affirmation",
        "Aff",
        "Provide positive reinforcement and encouragement to uplift the User's spirits.",
        'User: "I feel like I\'m not good enough." '
        'Assistant: "You\'ve accomplished so much already, and your abilities speak for themselves. '
        'Don\'t underestimate your capabilities."',
    ),
    (
        "Offer Hope",
        "OH",
        "Share optimistic perspectives or possibilities to instill hope.",
        'User: "I don\'t know if things will ever get better." '
        'Assistant: "Remember that change is constant, and there are always opportunities for growth '
        'and positive change."',
    ),
    (
        "Avoid Judgment And Criticism",
        "AJC",
        "It's important to create a non-judgmental and safe space for the User to express their "
        "emotions without fear of criticism. Refrain from passing judgment or being overly critical "
        "of their experiences or choices.",
        'User: "I\'m feeling so guilty for taking time off work to focus on my mental health." '
        'Assistant: "Taking care of your mental health is crucial, and it\'s not something to feel '
        'guilty about. Your well-being should always be a priority, and I\'m glad you recognized that. '
        'Is there anything I can do to support you during this time?"',
    ),
    (
        "Suggest Options",
        "SO",
        "Offer practical suggestions or alternative perspectives for addressing the issue at hand.",
        'User: "I\'m having trouble managing my stress." '
        'Assistant: "Have you considered trying relaxation techniques like deep breathing or '
        'mindfulness exercises?"',
    ),
    (
        "Collaborative Planning",
        "CP",
        "Work together with the User to develop an action plan.",
        'User: "I want to improve my time management skills." '
        'Assistant: "Let\'s brainstorm some strategies together. How about breaking tasks into '
        'smaller, more manageable chunks?"',
    ),
    (
        "Provide Different Perspectives",
        "PDP",
        "Offer alternative ways of looking at the situation to help the User gain new insights.",
        'User: "I\'m devastated that my project didn\'t succeed." '
        'Assistant: "Sometimes setbacks can lead to unexpected opportunities for learning and growth. '
        'It\'s a chance to reassess and try again."',
    ),
    (
        "Reframe Negative Thoughts",
        "RNT",
        "Help the User reframe negative thoughts into more positive or realistic ones.",
        'User: "I\'m such a failure." '
        'Assistant: "Instead of thinking that way, let\'s focus on what you\'ve learned from this '
        'experience and how you can apply it moving forward."',
    ),
    (
        "Share Information",
        "SI",
        "Provide educational or factual information about emotions, coping mechanisms, or self-care "
        "practices.",
        'User: "I\'m struggling to manage my anxiety." '
        'Assistant: "Did you know that deep breathing exercises and grounding techniques can help '
        'reduce anxiety symptoms? Would you like me to explain how to practice them?"',
    ),
    (
        "Normalize Experiences",
        "NE",
        "Explain that certain emotions or reactions are common and part of the human experience.",
        'User: "I feel so guilty for taking time for myself." '
        'Assistant: "It\'s common to feel guilty about self-care, but it\'s essential for your '
        'well-being. Remember, you deserve to prioritize your needs too."',
    ),
    (
        "Promote Self-Care Practices",
        "PSP",
        "Advocate for engaging in activities that promote well-being and self-care.",
        '"Make sure to take some time for yourself and do something that brings you joy and '
        'relaxation."',
    ),
    (
        "Stress Management",
        "SM",
        "Provide suggestions for stress management techniques like exercise, meditation, or spending "
        "time in nature.",
        '"Engaging in regular physical activity can help reduce stress and improve mood."',
    ),
    (
        "Others",
        "Oth",
        "Interact with friendly greetings and employ additional supportive techniques that are not "
        "covered by the previously mentioned categories.",
        '"Hello! It\'s good to hear from you. How have things been since we last talked?"',
    ),
]


def _fold(label: str) -> str:
    """Case- and punctuation-insensitive key for fuzzy lookups."""
    return "".join(ch for ch in label.casefold() if ch.isalnum())


class StrategyRegistry:
    """Ordered, closed registry of the 16 response strategies."""

    def __init__(self, strategies: list[Strategy]):
        self._strategies = list(strategies)
        self._by_name = {s.name: s for s in strategies}
        self._by_abbrev = {s.abbreviation: s for s in strategies}
        if len(self._by_abbrev) != len(strategies):
            raise InvalidRegistry("duplicate strategy abbreviations")
        self._fuzzy = {}
        for s in strategies:
            self._fuzzy[_fold(s.name)] = s
            self._fuzzy[_fold(s.abbreviation)] = s

    def __iter__(self):
        return iter(self._strategies)

    def __len__(self) -> int:
        return len(self._strategies)

    @property
    def names(self) -> list[str]:
        return [s.name for s in self._strategies]

    @property
    def abbreviations(self) -> list[str]:
        return [s.abbreviation for s in self._strategies]

    def resolve(self, label: str) -> Strategy:
        """Exact lookup by full name or abbreviation."""
        strategy = self._by_name.get(label) or self._by_abbrev.get(label)
        if strategy is None:
            raise UnknownStrategy(f"unknown strategy label: {label!r}")
        return strategy

    def fuzzy_resolve(self, label: str) -> Strategy | None:
        """Lenient lookup: case-insensitive, punctuation-insensitive, abbreviations.

        Returns None when nothing plausibly matches; the caller decides whether
        that is fatal.
        """
        if not isinstance(label, str) or not label.strip():
            return None
        return self._fuzzy.get(_fold(label))


class InvalidRegistry(Exception):
    pass


_SCENARIO_ROWS: list[tuple[str, tuple[str, ...]]] = [
    ("Breakups or Divorce", (
        "Processing the emotions and grief following the end of a long-term relationship.",
        "Seeking guidance on how to navigate a recent breakup and move forward.",
    )),
    ("Conflicts or Communication Problems", (
        "Dealing with a misunderstanding or disagreement with a close friend or family member.",
        "Seeking advice on resolving conflicts with a romantic partner and improving communication.",
    )),
    ("Communication Challenges", (
        "Helping a person find effective ways to express their needs and concerns to their partner, "
        "fostering open and constructive communication.",
    )),
    ("Coping with the Death of a Loved One", (
        "Navigating the stages of grief and finding ways to honor the memory of the deceased.",
        "Seeking support in managing the emotional impact of losing a close family member or friend.",
    )),
    ("Dealing with the Loss of a Pet", (
        "Processing the deep sadness and emptiness after the death of a beloved pet.",
        "Seeking understanding and comfort while grieving the loss of a long-time companion animal.",
    )),
    ("Work-related Stress and Burnout", (
        "Coping with excessive workload, pressure, and a demanding work environment.",
        "Seeking strategies to manage stress and achieve a healthier work-life balance.",
    )),
    ("Financial Worries and Uncertainty", (
        "Navigating financial challenges such as debt, job loss, or unexpected expenses.",
        "Seeking emotional support and practical advice to alleviate financial stress and regain "
        "stability.",
    )),
    ("Unemployment-related Stress", (
        "Encouraging someone who is about to lose their job due to poor company performance, "
        "discussing the possibility of changing jobs, prioritizing self-care, and staying positive.",
    )),
    ("Academic Stress", (
        "Offering guidance and study tips to a student feeling overwhelmed by their workload, "
        "helping them create a study plan and adopt healthy stress management techniques.",
    )),
    ("Spirituality and Faith", (
        "Offering guidance and resources to someone who is questioning their faith or seeking "
        "spiritual fulfillment, providing support as they explore their beliefs and values.",
    )),
    ("Managing Bipolar Disorder", (
        "Finding support and strategies to navigate the highs and lows of bipolar disorder.",
        "Seeking advice on maintaining stability, managing medication, and recognizing warning signs.",
    )),
    ("Anxiety and Panic", (
        "Providing guidance and techniques for someone who experiences social anxiety, helping them "
        "gradually face their fears and build confidence in social situations.",
    )),
    ("Depression and Low Mood", (
        "Dealing with feelings of sadness, loss of interest, and lack of motivation.",
        "Seeking guidance on coping mechanisms and professional help for managing depression symptoms.",
        "Being there for a person experiencing depression, actively listening to their struggles, "
        "and encouraging them to seek professional help and engage in self-care activities.",
    )),
    ("Adjusting to a New Job or Role", (
        "Coping with the challenges and expectations of a new job or promotion.",
        "Seeking guidance on adapting to a new work environment and building professional "
        "relationships.",
    )),
    ("Chronic Illness or Pain Management", (
        "Coping with the emotional impact of a chronic illness, including pain, limitations, and "
        "lifestyle adjustments.",
        "Seeking support in managing daily challenges, finding self-care strategies, and connecting "
        "with others facing similar health issues.",
    )),
    ("Coping with a Diagnosis or Medical Treatment", (
        "Processing the emotions surrounding a new medical diagnosis and navigating treatment "
        "options.",
        "Seeking emotional support and practical guidance to cope with medical procedures, side "
        "effects, and lifestyle changes.",
    )),
    ("Caregiver Support", (
        "Offering guidance and resources to a caregiver of an elderly parent, discussing techniques "
        "for managing caregiver stress and suggesting respite care options.",
    )),
    ("Finding Meaning and Purpose in Life", (
        "Exploring questions related to the meaning of life, personal values, and finding purpose.",
        "Assisting someone who is questioning their life's purpose and exploring different avenues "
        "for finding meaning, discussing their values and interests, and encouraging self-reflection.",
    )),
    ("Navigating Gender Identity and Transitioning", (
        "Seeking support and resources while exploring gender identity and considering transitioning.",
        "Accessing guidance on navigating social, medical, and legal aspects of transitioning.",
    )),
    ("Moving to a New City or Country", (
        "Dealing with feelings of homesickness, cultural adjustment, and building a new social "
        "network.",
        "Seeking support in navigating the practical and emotional aspects of relocating to a "
        "different city or country.",
    )),
    ("Career Transitions", (
        "Assisting someone who is considering a career change, helping them explore their passions, "
        "transferable skills, and develop a plan for transitioning into a new field.",
    )),
    ("Parenthood and Parenting Challenges", (
        "Supporting a new parent who is feeling overwhelmed and sleep-deprived, offering reassurance, "
        "and sharing tips for self-care and coping strategies for the demands of parenthood.",
    )),
    ("Low Self-Esteem or Lack of Confidence", (
        "Addressing negative self-perceptions and building self-worth.",
        "Seeking techniques for cultivating self-compassion and improving self-esteem.",
    )),
    ("Body Image Concerns and Eating Disorders", (
        "Dealing with body dissatisfaction and the impact it has on self-image and overall "
        "well-being.",
        "Seeking support in recovering from an eating disorder and developing a healthy relationship "
        "with food and body.",
    )),
    ("LGBTQ+ Identity", (
        "Assisting someone in the process of coming out as gay, offering support, connecting them "
        "with LGBTQ+ community resources, and being a source of understanding.",
    )),
    ("Cultural Identity and Belonging", (
        "Engaging in discussions with someone who is exploring their mixed-race identity and helping "
        "them embrace and celebrate their diverse heritage.",
    )),
    ("Academic Stress or Pressure", (
        "Coping with academic expectations, exam anxiety, or perfectionism.",
        "Seeking strategies for time management, study techniques, and reducing academic stress.",
    )),
    ("Job Loss or Career Setbacks", (
        "Navigating the emotions and challenges of losing a job or facing career setbacks.",
        "Seeking guidance and encouragement for career transitions or exploring new professional "
        "opportunities.",
    )),
    ("Parenting Challenges and Parental Guilt", (
        "Managing parental responsibilities, parenting styles, and dealing with parental guilt.",
        "Seeking advice on effective communication with children and finding a balance between work "
        "and family.",
    )),
    ("Sibling Rivalry or Family Conflict", (
        "Resolving conflicts and improving relationships with siblings or other family members.",
        "Seeking guidance on navigating family dynamics, establishing healthy boundaries, and "
        "fostering understanding.",
    )),
    ("Surviving and Recovering from Physical or Emotional Abuse", (
        "Processing the trauma of past abuse and seeking support for healing and recovery.",
        "Finding resources and coping strategies for managing the emotional impact of abuse.",
    )),
    ("Healing from Sexual Assault or Domestic Violence", (
        "Navigating the complex emotions, seeking support, and developing coping mechanisms after "
        "experiencing sexual assault or domestic violence.",
        "Accessing information on trauma-informed therapy and support networks for survivors of "
        "assault or violence.",
    )),
    ("Post-Traumatic Stress Disorder (PTSD)", (
        "Creating a safe and non-judgmental space for a military veteran with PTSD to share their "
        "experiences and providing resources for trauma-focused therapy and support groups.",
    )),
    ("Healing from Abuse", (
        "Assisting someone who has recently left an abusive relationship, connecting them with local "
        "support services, and offering encouragement as they rebuild their life.",
    )),
    ("Addiction and Recovery", (
        "Offering empathy and understanding to someone battling addiction, discussing treatment "
        "options, and providing emotional support during their journey to recovery.",
    )),
    ("Support for Loved Ones or Friends", (
        "Supporting a parent who has a child dealing with addiction, offering a listening ear, and "
        "connecting them with support groups and counseling services.",
    )),
]


class ScenarioRegistry:
    """36 canonical scenarios plus any locally registered extensions."""

    def __init__(self, scenarios: list[Scenario] | None = None):
        rows = scenarios if scenarios is not None else [
            Scenario(name, examples) for name, examples in _SCENARIO_ROWS
        ]
        self._scenarios: dict[str, Scenario] = {}
        for sc in rows:
            if sc.name in self._scenarios:
                raise InvalidRegistry(f"duplicate scenario name: {sc.name!r}")
            self._scenarios[sc.name] = sc

    def __iter__(self):
        return iter(self._scenarios.values())

    def __len__(self) -> int:
        return len(self._scenarios)

    def __contains__(self, name: str) -> bool:
        return name in self._scenarios

    @property
    def names(self) -> list[str]:
        return list(self._scenarios)

    def canonical_names(self) -> list[str]:
        return [sc.name for sc in self._scenarios.values() if sc.canonical]

    def resolve(self, name: str) -> Scenario:
        try:
            return self._scenarios[name]
        except KeyError:
            raise UnknownScenario(f"unknown scenario: {name!r}") from None

    def register(self, name: str, example_descriptions: tuple[str, ...] = ()) -> Scenario:
        """Add a non-canonical scenario; returns the existing entry if present."""
        if name in self._scenarios:
            return self._scenarios[name]
        scenario = Scenario(name, tuple(example_descriptions), canonical=False)
        self._scenarios[name] = scenario
        return scenario


def default_strategies() -> StrategyRegistry:
    return StrategyRegistry([Strategy(*row) for row in _STRATEGY_ROWS])


def default_scenarios() -> ScenarioRegistry:
    """Fresh registry of the 36 canonical scenarios (safe to extend locally)."""
    return ScenarioRegistry()


# Shared read-only instance; code that registers extra scenarios should build
# its own via default_scenarios().
STRATEGIES = default_strategies()
SCENARIOS = default_scenarios()
