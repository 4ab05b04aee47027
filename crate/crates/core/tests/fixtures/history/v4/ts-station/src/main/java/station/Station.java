package station;

import javax.persistence.Entity;

@Entity
public class Station {
    private String id;
    private String name;
    private int distance;
}
