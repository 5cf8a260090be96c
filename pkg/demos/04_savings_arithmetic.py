#!/usr/bin/env python3
"""Demo 4: the resource-savings arithmetic, one figure at a time.

A single course hands out a few pages per student per week; scaled to a
campus the totals convert into reams and trees via the fixed
8300 pages = 16 reams = 1 tree identity, computed exactly and rounded
once at the end.
"""

from fractions import Fraction

from pidsim import (
    CourseUsage,
    campus_pages,
    pages_per_course,
    pages_to_reams,
    pages_to_trees,
)


def main():
    print("=" * 70)
    print("Demo 4: pages, reams, trees")
    print("=" * 70)

    usage = CourseUsage(students=18, pages_per_student_week=3, weeks=17)
    weekly = usage.students * usage.pages_per_student_week
    total = pages_per_course(usage)
    print(f"\none course: {usage.students} students x "
          f"{usage.pages_per_student_week} pages/week = {weekly} pages/week")
    print(f"over a {usage.weeks}-week semester: {total} pages")

    campus = campus_pages(800, Fraction(1, 4), 1836)
    print(f"\ncampus scale: 800 instructors, a quarter of them heavy users "
          f"at 1836 pages each")
    print(f"  -> {campus:,} pages per semester")
    print(f"  -> {pages_to_reams(campus)} reams, {pages_to_trees(campus)} trees")

    print("\nthe conversion anchor: 8300 pages ->",
          pages_to_reams(8300), "reams ->", pages_to_trees(8300), "tree")


if __name__ == "__main__":
    main()
